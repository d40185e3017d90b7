#include "snnadv/layers.hpp"

#include <algorithm>
#include <cmath>

namespace snnadv {

std::string layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::AvgPool: return "avgpool";
        case LayerKind::Dense: return "dense";
        case LayerKind::Relu: return "relu";
        case LayerKind::Dropout: return "dropout";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv2d") return LayerKind::Conv2d;
    if (name == "avgpool") return LayerKind::AvgPool;
    if (name == "dense") return LayerKind::Dense;
    if (name == "relu") return LayerKind::Relu;
    if (name == "dropout") return LayerKind::Dropout;
    if (name == "flatten") return LayerKind::Flatten;
    throw ValueError("unknown layer kind: " + name);
}

LayerSpec LayerSpec::conv2d(int out_maps, int kernel) {
    if (out_maps <= 0) throw ValueError("conv2d: out_maps must be positive");
    if (kernel <= 0 || kernel % 2 == 0) throw ValueError("conv2d: kernel size must be positive and odd");
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.out_maps = out_maps;
    s.kernel = kernel;
    return s;
}

LayerSpec LayerSpec::avgpool(int window) {
    if (window <= 0) throw ValueError("avgpool: window must be positive");
    LayerSpec s;
    s.kind = LayerKind::AvgPool;
    s.window = window;
    return s;
}

LayerSpec LayerSpec::dense(int units) {
    if (units <= 0) throw ValueError("dense: units must be positive");
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.units = units;
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::Relu;
    return s;
}

LayerSpec LayerSpec::dropout(double rate) {
    if (rate < 0.0 || rate >= 1.0) throw ValueError("dropout: rate must be in [0, 1)");
    LayerSpec s;
    s.kind = LayerKind::Dropout;
    s.rate = rate;
    return s;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.kind = LayerKind::Flatten;
    return s;
}

Shape layer_output_shape(const LayerSpec& spec, const Shape& in) {
    switch (spec.kind) {
        case LayerKind::Conv2d: {
            if (in.size() != 3) {
                throw ShapeError("conv2d expects [C,H,W] input, got " + shape_to_string(in));
            }
            return {static_cast<std::size_t>(spec.out_maps), in[1], in[2]};
        }
        case LayerKind::AvgPool: {
            if (in.size() != 3) {
                throw ShapeError("avgpool expects [C,H,W] input, got " + shape_to_string(in));
            }
            const auto w = static_cast<std::size_t>(spec.window);
            if (in[1] % w != 0 || in[2] % w != 0) {
                throw ShapeError("avgpool window " + std::to_string(spec.window) +
                                 " does not divide input " + shape_to_string(in));
            }
            return {in[0], in[1] / w, in[2] / w};
        }
        case LayerKind::Dense: {
            if (in.size() != 1) {
                throw ShapeError("dense expects rank-1 input (flatten first), got " + shape_to_string(in));
            }
            return {static_cast<std::size_t>(spec.units)};
        }
        case LayerKind::Relu:
        case LayerKind::Dropout:
            return in;
        case LayerKind::Flatten:
            return {shape_numel(in)};
    }
    throw ShapeError("unreachable layer kind");
}

Shape layer_weight_shape(const LayerSpec& spec, const Shape& in) {
    switch (spec.kind) {
        case LayerKind::Conv2d:
            return {static_cast<std::size_t>(spec.out_maps), in[0], static_cast<std::size_t>(spec.kernel),
                    static_cast<std::size_t>(spec.kernel)};
        case LayerKind::Dense:
            return {static_cast<std::size_t>(spec.units), in[0]};
        default:
            return {};
    }
}

Shape layer_bias_shape(const LayerSpec& spec) {
    switch (spec.kind) {
        case LayerKind::Conv2d:
            return {static_cast<std::size_t>(spec.out_maps)};
        case LayerKind::Dense:
            return {static_cast<std::size_t>(spec.units)};
        default:
            return {};
    }
}

Tensor dense_forward(const Tensor& w, const Tensor& b, const Tensor& x) {
    const std::size_t out = w.extent(0), in = w.extent(1);
    if (x.size() != in) {
        throw ShapeError("dense: weight " + shape_to_string(w.shape()) + " vs input " +
                         shape_to_string(x.shape()));
    }
    Tensor y({out});
    const double* pw = w.data();
    for (std::size_t j = 0; j < in; ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;  // spike inputs are mostly zero
        for (std::size_t i = 0; i < out; ++i) y[i] += pw[i * in + j] * xj;
    }
    if (!b.empty()) {
        for (std::size_t i = 0; i < out; ++i) y[i] += b[i];
    }
    return y;
}

void dense_backward(const Tensor& w, const Tensor& x, const Tensor& dy,
                    Tensor& dw, Tensor& db, Tensor& dx) {
    const std::size_t out = w.extent(0), in = w.extent(1);
    dw = Tensor(w.shape());
    db = Tensor({out});
    dx = Tensor(x.shape());
    const double* pw = w.data();
    for (std::size_t i = 0; i < out; ++i) {
        const double g = dy[i];
        db[i] = g;
        if (g == 0.0) continue;
        double* dwrow = dw.data() + i * in;
        const double* wrow = pw + i * in;
        for (std::size_t j = 0; j < in; ++j) {
            dwrow[j] = g * x[j];
            dx[j] += g * wrow[j];
        }
    }
}

Tensor conv2d_forward(const Tensor& k, const Tensor& b, const Tensor& x) {
    const std::size_t maps = k.extent(0), chans = k.extent(1), ksz = k.extent(2);
    if (x.rank() != 3 || x.extent(0) != chans) {
        throw ShapeError("conv2d: kernel " + shape_to_string(k.shape()) + " vs input " +
                         shape_to_string(x.shape()));
    }
    const std::size_t h = x.extent(1), w = x.extent(2);
    const int pad = static_cast<int>(ksz - 1) / 2;
    Tensor y({maps, h, w});
    for (std::size_t c = 0; c < chans; ++c) {
        const double* xc = x.data() + c * h * w;
        for (std::size_t iy = 0; iy < h; ++iy) {
            for (std::size_t ix = 0; ix < w; ++ix) {
                const double xv = xc[iy * w + ix];
                if (xv == 0.0) continue;
                // scatter this input pixel into every output it feeds
                for (std::size_t m = 0; m < maps; ++m) {
                    const double* km = k.data() + (m * chans + c) * ksz * ksz;
                    double* ym = y.data() + m * h * w;
                    for (std::size_t dy = 0; dy < ksz; ++dy) {
                        const int oy = static_cast<int>(iy) - static_cast<int>(dy) + pad;
                        if (oy < 0 || oy >= static_cast<int>(h)) continue;
                        for (std::size_t dx = 0; dx < ksz; ++dx) {
                            const int ox = static_cast<int>(ix) - static_cast<int>(dx) + pad;
                            if (ox < 0 || ox >= static_cast<int>(w)) continue;
                            ym[oy * w + ox] += km[dy * ksz + dx] * xv;
                        }
                    }
                }
            }
        }
    }
    if (!b.empty()) {
        for (std::size_t m = 0; m < maps; ++m) {
            double* ym = y.data() + m * h * w;
            for (std::size_t i = 0; i < h * w; ++i) ym[i] += b[m];
        }
    }
    return y;
}

void conv2d_backward(const Tensor& k, const Tensor& x, const Tensor& dy,
                     Tensor& dk, Tensor& db, Tensor& dx) {
    const std::size_t maps = k.extent(0), chans = k.extent(1), ksz = k.extent(2);
    const std::size_t h = x.extent(1), w = x.extent(2);
    const int pad = static_cast<int>(ksz - 1) / 2;
    dk = Tensor(k.shape());
    db = Tensor({maps});
    dx = Tensor(x.shape());
    for (std::size_t m = 0; m < maps; ++m) {
        const double* gym = dy.data() + m * h * w;
        for (std::size_t i = 0; i < h * w; ++i) db[m] += gym[i];
        for (std::size_t c = 0; c < chans; ++c) {
            const double* xc = x.data() + c * h * w;
            double* dxc = dx.data() + c * h * w;
            const double* km = k.data() + (m * chans + c) * ksz * ksz;
            double* dkm = dk.data() + (m * chans + c) * ksz * ksz;
            for (std::size_t oy = 0; oy < h; ++oy) {
                for (std::size_t ox = 0; ox < w; ++ox) {
                    const double g = gym[oy * w + ox];
                    if (g == 0.0) continue;
                    for (std::size_t ddy = 0; ddy < ksz; ++ddy) {
                        const int iy = static_cast<int>(oy) + static_cast<int>(ddy) - pad;
                        if (iy < 0 || iy >= static_cast<int>(h)) continue;
                        for (std::size_t ddx = 0; ddx < ksz; ++ddx) {
                            const int ix = static_cast<int>(ox) + static_cast<int>(ddx) - pad;
                            if (ix < 0 || ix >= static_cast<int>(w)) continue;
                            dkm[ddy * ksz + ddx] += g * xc[iy * w + ix];
                            dxc[iy * w + ix] += g * km[ddy * ksz + ddx];
                        }
                    }
                }
            }
        }
    }
}

Tensor avgpool_forward(const Tensor& x, int window) {
    const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
    const auto win = static_cast<std::size_t>(window);
    const std::size_t oh = h / win, ow = w / win;
    Tensor y({c, oh, ow});
    const double inv = 1.0 / static_cast<double>(win * win);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* xc = x.data() + ch * h * w;
        double* yc = y.data() + ch * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double s = 0.0;
                for (std::size_t dy = 0; dy < win; ++dy) {
                    for (std::size_t dx = 0; dx < win; ++dx) {
                        s += xc[(oy * win + dy) * w + (ox * win + dx)];
                    }
                }
                yc[oy * ow + ox] = s * inv;
            }
        }
    }
    return y;
}

Tensor avgpool_backward(const Tensor& dy, int window, const Shape& in_shape) {
    const std::size_t c = in_shape[0], h = in_shape[1], w = in_shape[2];
    const auto win = static_cast<std::size_t>(window);
    const std::size_t oh = h / win, ow = w / win;
    Tensor dx(in_shape);
    const double inv = 1.0 / static_cast<double>(win * win);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* gc = dy.data() + ch * oh * ow;
        double* dc = dx.data() + ch * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double g = gc[oy * ow + ox] * inv;
                for (std::size_t dyw = 0; dyw < win; ++dyw) {
                    for (std::size_t dxw = 0; dxw < win; ++dxw) {
                        dc[(oy * win + dyw) * w + (ox * win + dxw)] = g;
                    }
                }
            }
        }
    }
    return dx;
}

Tensor relu_forward(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& pre, const Tensor& dy) {
    Tensor dx(pre.shape());
    for (std::size_t i = 0; i < pre.size(); ++i) dx[i] = pre[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

void fanin_uniform_init(std::vector<Tensor>& weights, SeededRng& rng) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
        Tensor& w = weights[i];
        if (w.empty()) continue;
        std::size_t fan_in = 1;
        for (std::size_t a = 1; a < w.rank(); ++a) fan_in *= w.shape()[a];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        SeededRng layer_rng = rng.child(i);
        for (std::size_t j = 0; j < w.size(); ++j) {
            w[j] = (2.0 * layer_rng.next_uniform() - 1.0) * bound;
        }
    }
}

}  // namespace snnadv
