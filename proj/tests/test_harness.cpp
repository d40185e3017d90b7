#include <doctest.h>

#include <filesystem>
#include <set>

#include "snnadv/harness.hpp"

using namespace snnadv;

namespace {

// six tiny lightly-trained models over a 6-pixel synthetic task; small
// enough that a full matrix cell runs in milliseconds
struct Desk {
    ModelSet models;
    Dataset train;
    Dataset test;
};

Dataset synth_task(int n, std::uint64_t seed) {
    Dataset d;
    d.num_classes = 3;
    SeededRng rng(seed);
    for (int i = 0; i < n; ++i) {
        const int label = i % 3;
        Tensor x({6});
        for (int j = 0; j < 6; ++j) {
            const double base = j / 2 == label ? 0.7 : 0.15;
            x[static_cast<std::size_t>(j)] = base + 0.2 * (rng.next_uniform() - 0.5);
        }
        d.items.push_back({x, label});
    }
    return d;
}

std::vector<LayerSpec> arch() {
    return {LayerSpec::dense(8), LayerSpec::relu(), LayerSpec::dense(3)};
}

AnnModel train_toy_ann(const Dataset& data, std::uint64_t seed, bool use_bias) {
    AnnModel m = make_ann({6}, arch());
    m.use_bias = use_bias;
    SeededRng rng(seed);
    init_weights(m, rng);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.learning_rate = 0.3;
    cfg.batch_size = 8;
    cfg.seed = seed;
    return train_ann(m, data, cfg);
}

SnnModel train_toy_snn2(const Dataset& data, std::uint64_t seed) {
    NeuronParams p;
    p.leak = LeakMode::Exponential;
    p.tau = 20.0;
    p.v_th = 1.0;
    SnnModel m = make_snn({6}, arch(), p, 40, Provenance::SpikeTrained);
    SeededRng rng(seed);
    init_weights(m, rng);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.learning_rate = 1.0;
    cfg.batch_size = 8;
    cfg.seed = seed;
    return train_snn_bp(m, data, cfg);
}

Desk make_desk() {
    static const Desk desk = [] {
        Desk d;
        d.train = synth_task(90, 1);
        d.test = synth_task(45, 2);
        d.models.ann = train_toy_ann(d.train, 11, true);
        d.models.ann_x = train_toy_ann(d.train, 22, true);
        const AnnModel src1 = train_toy_ann(d.train, 33, false);
        const AnnModel src1x = train_toy_ann(d.train, 44, false);
        ConvertOptions opts;
        opts.t_cal = 60;
        opts.horizon = 80;
        SeededRng c1(5), c2(6);
        d.models.snn1 = convert_ann_to_snn(src1, d.train, opts, c1).first;
        d.models.snn1_x = convert_ann_to_snn(src1x, d.train, opts, c2).first;
        d.models.snn2 = train_toy_snn2(d.train, 55);
        d.models.snn2_x = train_toy_snn2(d.train, 66);
        return d;
    }();
    return desk;
}

AttackConfig fgsm_cfg(double eps) {
    AttackConfig c;
    c.method = AttackMethod::Fgsm;
    c.epsilon = eps;
    c.steps = 1;
    return c;
}

}  // namespace

TEST_CASE("one attack config yields exactly the 4x3 grid") {
    const Desk desk = make_desk();
    const EvalReport report = run_matrix(desk.models, {fgsm_cfg(16.0 / 255.0)}, desk.test, 99);
    REQUIRE(report.rows.size() == 12);

    const std::set<std::string> scenarios{"whitebox", "bb-snn1", "bb-snn2", "bb-ann"};
    std::set<std::string> seen;
    for (const ReportRow& r : report.rows) {
        seen.insert(r.scenario);
        if (r.scenario == "whitebox") {
            CHECK(r.source == r.target);
        } else {
            CHECK((r.source == kIdAnnX || r.source == kIdSnn1X || r.source == kIdSnn2X));
            if (r.scenario == "bb-snn1") CHECK(r.source == kIdSnn1X);
            if (r.scenario == "bb-snn2") CHECK(r.source == kIdSnn2X);
            if (r.scenario == "bb-ann") CHECK(r.source == kIdAnnX);
        }
        CHECK((r.target == kIdAnn || r.target == kIdSnn1 || r.target == kIdSnn2));
        CHECK(r.clean_acc >= 0.0);
        CHECK(r.clean_acc <= 1.0);
        CHECK(r.adv_acc >= 0.0);
        CHECK(r.adv_acc <= 1.0);
        CHECK(r.acc_loss == r.clean_acc - r.adv_acc);  // exact, by construction
    }
    CHECK(seen == scenarios);
}

TEST_CASE("clean accuracy column matches an independent computation") {
    const Desk desk = make_desk();
    const std::uint64_t seed = 7;
    const EvalReport report = run_matrix(desk.models, {fgsm_cfg(8.0 / 255.0)}, desk.test, seed);
    const double ann_clean = accuracy(desk.models.ann, desk.test);
    const double snn1_clean = snn_accuracy(desk.models.snn1, desk.test, derive_seed(seed, 101));
    const double snn2_clean = snn_accuracy(desk.models.snn2, desk.test, derive_seed(seed, 102));
    for (const ReportRow& r : report.rows) {
        if (r.target == kIdAnn) CHECK(r.clean_acc == doctest::Approx(ann_clean).epsilon(1e-9));
        if (r.target == kIdSnn1) CHECK(r.clean_acc == doctest::Approx(snn1_clean).epsilon(1e-9));
        if (r.target == kIdSnn2) CHECK(r.clean_acc == doctest::Approx(snn2_clean).epsilon(1e-9));
    }
}

TEST_CASE("matrix runs are byte-deterministic") {
    const Desk desk = make_desk();
    const std::vector<AttackConfig> attacks = {fgsm_cfg(8.0 / 255.0), fgsm_cfg(32.0 / 255.0)};
    const EvalReport a = run_matrix(desk.models, attacks, desk.test, 1234);
    const EvalReport b = run_matrix(desk.models, attacks, desk.test, 1234);
    CHECK(report_to_csv(a) == report_to_csv(b));
    CHECK(a == b);
    // a different seed re-encodes spiking inputs differently
    const EvalReport c = run_matrix(desk.models, attacks, desk.test, 4321);
    CHECK(report_to_csv(a) != report_to_csv(c));
}

TEST_CASE("preset grid carries 12 configs and finishes the tiny matrix quickly") {
    const Desk desk = make_desk();
    const auto grid = preset_attack_grid(3);
    REQUIRE(grid.size() == 12);
    for (const AttackConfig& c : grid) CHECK_NOTHROW(c.validate());
    const EvalReport report = run_matrix(desk.models, grid, desk.test, 5);
    CHECK(report.rows.size() == 12 * 12);
}

TEST_CASE("csv emission is stable and header-only when empty") {
    EvalReport empty;
    CHECK(report_to_csv(empty) ==
          "scenario,method,epsilon,steps,source,target,clean_acc,adv_acc,acc_loss\n");

    ReportRow r;
    r.scenario = "whitebox";
    r.method = "fgsm";
    r.epsilon = 8.0 / 255.0;
    r.steps = 1;
    r.source = kIdAnn;
    r.target = kIdAnn;
    r.clean_acc = 0.9571;
    r.adv_acc = 0.1204;
    r.acc_loss = r.clean_acc - r.adv_acc;
    EvalReport one;
    one.rows.push_back(r);
    const std::string csv = report_to_csv(one);
    CHECK(csv ==
          "scenario,method,epsilon,steps,source,target,clean_acc,adv_acc,acc_loss\n"
          "whitebox,fgsm,0.0314,1,M_ANN,M_ANN,0.9571,0.1204,0.8367\n");
    CHECK(report_to_csv(one) == csv);

    const EvalReport parsed = report_from_csv(csv);
    REQUIRE(parsed.rows.size() == 1);
    CHECK(parsed.rows[0].scenario == "whitebox");
    CHECK(parsed.rows[0].acc_loss == doctest::Approx(0.8367).epsilon(1e-9));
}

TEST_CASE("json report round-trips equal") {
    const Desk desk = make_desk();
    const EvalReport report = run_matrix(desk.models, {fgsm_cfg(16.0 / 255.0)}, desk.test, 42);
    const EvalReport back = report_from_json(report_to_json(report));
    CHECK(back == report);
    CHECK(report_to_json(back) == report_to_json(report));
}

TEST_CASE("emit_report writes both formats and load_report sniffs them") {
    const auto dir = std::filesystem::temp_directory_path() / "snnadv_harness_tests";
    std::filesystem::create_directories(dir);
    const Desk desk = make_desk();
    const EvalReport report = run_matrix(desk.models, {fgsm_cfg(16.0 / 255.0)}, desk.test, 42);
    emit_report(report, (dir / "r.csv").string(), ReportFormat::Csv);
    emit_report(report, (dir / "r.json").string(), ReportFormat::Json);
    const EvalReport from_json = load_report((dir / "r.json").string());
    CHECK(from_json == report);
    const EvalReport from_csv = load_report((dir / "r.csv").string());
    REQUIRE(from_csv.rows.size() == report.rows.size());
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(from_csv.rows[i].scenario == report.rows[i].scenario);
        CHECK(from_csv.rows[i].adv_acc == doctest::Approx(report.rows[i].adv_acc).epsilon(1e-9));
    }
    CHECK_THROWS_AS(emit_report(report, (dir / "no-such-dir" / "r.csv").string(), ReportFormat::Csv),
                    Error);
}

TEST_CASE("run_scenario produces a single well-formed row") {
    const Desk desk = make_desk();
    ModelFile target;
    target.name = kIdSnn2;
    target.model = desk.models.snn2;
    ModelFile source;
    source.name = kIdAnnX;
    source.model = desk.models.ann_x;
    const ReportRow row = run_scenario(ScenarioKind::BbAnn, target, source, fgsm_cfg(16.0 / 255.0),
                                       desk.test, 9);
    CHECK(row.scenario == "bb-ann");
    CHECK(row.source == kIdAnnX);
    CHECK(row.target == kIdSnn2);
    CHECK(row.acc_loss == row.clean_acc - row.adv_acc);
}

TEST_CASE("adversarial sets survive the container round trip for eval") {
    const auto dir = std::filesystem::temp_directory_path() / "snnadv_harness_tests";
    std::filesystem::create_directories(dir);
    const Desk desk = make_desk();
    AttackConfig cfg = fgsm_cfg(32.0 / 255.0);
    cfg.seed = 77;
    const auto advs = ann_adv(desk.test, desk.models.ann_x, cfg, kIdAnnX);
    const Dataset as_ds = adv_to_dataset(advs, desk.test.num_classes);
    save_dataset_container(as_ds, (dir / "adv.set").string(), "ann-crafted");
    const Dataset loaded = load_dataset_container((dir / "adv.set").string());

    ModelFile target;
    target.name = kIdAnn;
    target.model = desk.models.ann;
    const ReportRow row = eval_on_adv_set(ScenarioKind::BbAnn, target, kIdAnnX, cfg, loaded,
                                          desk.test, 3);
    // the container path must agree exactly with the in-memory path
    const double direct = adv_accuracy_ann(desk.models.ann, advs);
    CHECK(row.adv_acc == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("scenario names round-trip") {
    for (ScenarioKind k : {ScenarioKind::Whitebox, ScenarioKind::BbSnn1, ScenarioKind::BbSnn2,
                           ScenarioKind::BbAnn}) {
        CHECK(scenario_from_name(scenario_name(k)) == k);
    }
    CHECK_THROWS_AS(scenario_from_name("greybox"), ValueError);
}
