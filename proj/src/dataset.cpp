#include "snnadv/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "container.hpp"
#include "snnadv/error.hpp"

namespace snnadv {

Shape Dataset::input_shape() const {
    if (items.empty()) throw ValueError("dataset is empty");
    return items.front().x.shape();
}

namespace {

constexpr char kDatasetMagic[8] = {'S', 'N', 'A', 'D', 'V', 'S', 'E', 'T'};
constexpr std::uint32_t kMnistImageMagic = 0x00000803;
constexpr std::uint32_t kMnistLabelMagic = 0x00000801;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::uint32_t be_u32(const std::string& buf, std::size_t off, const std::string& path) {
    if (off + 4 > buf.size()) {
        throw FormatError(path + ": truncated at byte " + std::to_string(buf.size()));
    }
    return (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off])) << 24) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 1])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 2])) << 8) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 3]));
}

// Shift every channel to zero mean over the loaded set. Raw values are in
// [0, 1], so the centered values always satisfy |x| <= 1.
void center_channels(Dataset& ds, std::size_t channels) {
    if (ds.empty()) return;
    const Shape shape = ds.items.front().x.shape();
    const std::size_t per_channel = shape_numel(shape) / channels;
    std::vector<double> mean(channels, 0.0);
    for (const Sample& s : ds.items) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double* p = s.x.data() + c * per_channel;
            for (std::size_t i = 0; i < per_channel; ++i) mean[c] += p[i];
        }
    }
    const double n = static_cast<double>(ds.size() * per_channel);
    for (std::size_t c = 0; c < channels; ++c) mean[c] /= n;
    for (Sample& s : ds.items) {
        for (std::size_t c = 0; c < channels; ++c) {
            double* p = s.x.data() + c * per_channel;
            for (std::size_t i = 0; i < per_channel; ++i) p[i] -= mean[c];
        }
    }
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       std::optional<std::size_t> limit) {
    const std::string img = read_file(images_path);
    const std::string lab = read_file(labels_path);

    if (be_u32(img, 0, images_path) != kMnistImageMagic) {
        throw FormatError(images_path + ": bad image magic at byte 0");
    }
    if (be_u32(lab, 0, labels_path) != kMnistLabelMagic) {
        throw FormatError(labels_path + ": bad label magic at byte 0");
    }
    const std::size_t img_count = be_u32(img, 4, images_path);
    const std::size_t rows = be_u32(img, 8, images_path);
    const std::size_t cols = be_u32(img, 12, images_path);
    const std::size_t lab_count = be_u32(lab, 4, labels_path);
    if (img_count != lab_count) {
        throw FormatError(images_path + ": image count " + std::to_string(img_count) +
                          " does not match label count " + std::to_string(lab_count));
    }
    const std::size_t pixels = rows * cols;
    if (img.size() < 16 + img_count * pixels) {
        throw FormatError(images_path + ": truncated at byte " + std::to_string(img.size()) +
                          " (need " + std::to_string(16 + img_count * pixels) + ")");
    }
    if (lab.size() < 8 + lab_count) {
        throw FormatError(labels_path + ": truncated at byte " + std::to_string(lab.size()));
    }

    const std::size_t n = std::min(limit.value_or(img_count), img_count);
    Dataset ds;
    ds.num_classes = 10;
    ds.items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.x = Tensor({1, rows, cols});
        const unsigned char* p = reinterpret_cast<const unsigned char*>(img.data()) + 16 + i * pixels;
        for (std::size_t j = 0; j < pixels; ++j) s.x[j] = static_cast<double>(p[j]) / 255.0;
        const auto label = static_cast<unsigned char>(lab[8 + i]);
        if (label > 9) {
            throw FormatError(labels_path + ": label " + std::to_string(label) + " out of range at byte " +
                              std::to_string(8 + i));
        }
        s.label = label;
        ds.items.push_back(std::move(s));
    }
    center_channels(ds, 1);
    return ds;
}

Dataset load_cifar10_bin(const std::string& path, std::optional<std::size_t> limit) {
    const std::string buf = read_file(path);
    constexpr std::size_t kRecord = 3073;  // 1 label byte + 3 * 1024 pixel bytes
    if (buf.size() % kRecord != 0) {
        throw FormatError(path + ": file length " + std::to_string(buf.size()) +
                          " is not a multiple of " + std::to_string(kRecord));
    }
    const std::size_t count = buf.size() / kRecord;
    const std::size_t n = std::min(limit.value_or(count), count);
    Dataset ds;
    ds.num_classes = 10;
    ds.items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t off = i * kRecord;
        const auto label = static_cast<unsigned char>(buf[off]);
        if (label > 9) {
            throw FormatError(path + ": label " + std::to_string(label) + " out of range at byte " +
                              std::to_string(off));
        }
        Sample s;
        s.label = label;
        s.x = Tensor({3, 32, 32});
        const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data()) + off + 1;
        for (std::size_t j = 0; j < 3072; ++j) s.x[j] = static_cast<double>(p[j]) / 255.0;
        ds.items.push_back(std::move(s));
    }
    center_channels(ds, 3);
    return ds;
}

std::string mnist_labels_path_for(const std::string& images_path) {
    std::string out = images_path;
    bool changed = false;
    const auto replace = [&](const std::string& from, const std::string& to) {
        const std::size_t pos = out.find(from);
        if (pos != std::string::npos) {
            out.replace(pos, from.size(), to);
            changed = true;
        }
    };
    replace("images", "labels");
    replace("idx3", "idx1");
    if (!changed) {
        throw ValueError("cannot infer a labels path from " + images_path +
                         "; pass the labels file explicitly");
    }
    return out;
}

Dataset load_dataset(const std::string& path, DatasetFormat format,
                     std::optional<std::size_t> limit) {
    switch (format) {
        case DatasetFormat::MnistIdx:
            return load_mnist_idx(path, mnist_labels_path_for(path), limit);
        case DatasetFormat::Cifar10Bin:
            return load_cifar10_bin(path, limit);
    }
    throw ValueError("unknown dataset format");
}

void save_dataset_container(const Dataset& ds, const std::string& path, const std::string& note) {
    nlohmann::json manifest;
    manifest["count"] = ds.size();
    manifest["num-classes"] = ds.num_classes;
    manifest["note"] = note;
    std::vector<int> labels;
    labels.reserve(ds.size());
    for (const Sample& s : ds.items) labels.push_back(s.label);
    manifest["labels"] = labels;
    std::vector<double> payload;
    if (!ds.empty()) {
        manifest["shape"] = ds.items.front().x.shape();
        payload.reserve(ds.size() * ds.items.front().x.size());
        for (const Sample& s : ds.items) {
            if (s.x.shape() != ds.items.front().x.shape()) {
                throw ValueError("dataset container requires uniform sample shapes");
            }
            payload.insert(payload.end(), s.x.values().begin(), s.x.values().end());
        }
    } else {
        manifest["shape"] = Shape{};
    }
    detail::write_container(path, kDatasetMagic, manifest, payload);
}

Dataset load_dataset_container(const std::string& path, std::optional<std::size_t> limit,
                               std::string* note_out) {
    auto [manifest, payload] = detail::read_container(path, kDatasetMagic);
    Dataset ds;
    ds.num_classes = manifest.value("num-classes", 10);
    if (note_out) *note_out = manifest.value("note", "");
    const std::size_t count = manifest.at("count").get<std::size_t>();
    const auto labels = manifest.at("labels").get<std::vector<int>>();
    if (labels.size() != count) throw FormatError(path + ": label count mismatch");
    if (count == 0) return ds;
    const auto shape = manifest.at("shape").get<Shape>();
    const std::size_t numel = shape_numel(shape);
    if (payload.size() != count * numel) {
        throw FormatError(path + ": payload holds " + std::to_string(payload.size()) +
                          " values, expected " + std::to_string(count * numel));
    }
    const std::size_t n = std::min(limit.value_or(count), count);
    ds.items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.label = labels[i];
        s.x = Tensor(shape, std::vector<double>(payload.begin() + static_cast<std::ptrdiff_t>(i * numel),
                                                payload.begin() + static_cast<std::ptrdiff_t>((i + 1) * numel)));
        ds.items.push_back(std::move(s));
    }
    return ds;
}

}  // namespace snnadv
