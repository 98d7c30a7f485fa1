#include "axdg/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "axdg/distributions.hpp"

namespace axdg {

std::size_t LabeledDataset::n_labeled() const {
    std::size_t n = 0;
    for (std::uint8_t m : labeled_mask) n += m;
    return n;
}

LabeledDataset halfmoons(int n, double noise_sigma, RngStream rng) {
    if (n <= 0 || n % 2 != 0) throw std::invalid_argument("halfmoons: n must be positive and even");
    const int half = n / 2;
    LabeledDataset ds;
    ds.n_classes = 2;
    ds.x = Tensor({(std::size_t)n, 2});
    ds.y.resize(n);
    RngStream t_rng = rng.child(1);
    RngStream noise_rng = rng.child(2);
    for (int i = 0; i < n; ++i) {
        const double t = t_rng.uniform(0.0, M_PI);
        double px, py;
        if (i < half) {
            px = std::cos(t);
            py = std::sin(t);
            ds.y[i] = 0;
        } else {
            px = 1.0 - std::cos(t);
            py = 1.0 - std::sin(t) - 0.5;
            ds.y[i] = 1;
        }
        ds.x.at(i, 0) = px + noise_sigma * noise_rng.normal();
        ds.x.at(i, 1) = py + noise_sigma * noise_rng.normal();
    }
    return ds;
}

void label_subset(LabeledDataset& ds, int n_labels, RngStream rng) {
    const int c_total = ds.n_classes;
    ds.labeled_mask.assign(ds.size(), 0);
    if (n_labels == 0) return;
    if (n_labels % c_total != 0)
        throw std::invalid_argument("label_subset: n_labels must divide evenly across classes");
    const int per_class = n_labels / c_total;
    for (int c = 0; c < c_total; ++c) {
        std::vector<int> rows;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.y[i] == c) rows.push_back((int)i);
        if ((int)rows.size() < per_class)
            throw std::invalid_argument("label_subset: class " + std::to_string(c) +
                                        " has only " + std::to_string(rows.size()) + " rows");
        RngStream class_rng = rng.child(c);
        class_rng.shuffle(rows.begin(), rows.end());
        for (int k = 0; k < per_class; ++k) ds.labeled_mask[rows[k]] = 1;
    }
}

PotentialTarget bimodal_potential() {
    // log[ 1/2 N(z; (-2,0), I) + 1/2 N(z; (2,0), I) ]; integrates to 1.
    PotentialTarget t;
    t.graph = [](Graph& g, Value z) {
        const Tensor& zt = g.value(z);
        const std::size_t b = zt.dim(0);
        auto component = [&](double mx) {
            Value mu = g.leaf([&] {
                Tensor m({b, 2});
                for (std::size_t i = 0; i < b; ++i) m.at(i, 0) = mx;
                return m;
            }());
            Value sq = g.sum(g.square(g.sub(z, mu)), 1);
            return g.add_scalar(g.scale(sq, -0.5), -kLog2Pi);
        };
        Value c0 = g.reshape(component(-2.0), {b, 1});
        Value c1 = g.reshape(component(2.0), {b, 1});
        const Value cols[] = {c0, c1};
        Value stacked = g.concat_cols(cols);
        return g.add_scalar(g.log_sum_exp(stacked, 1), std::log(0.5));
    };
    t.log_u = [](double z0, double z1) {
        auto comp = [&](double mx) {
            const double d0 = z0 - mx, d1 = z1;
            return -kLog2Pi - 0.5 * (d0 * d0 + d1 * d1);
        };
        const double a = comp(-2.0), b = comp(2.0);
        const double m = std::max(a, b);
        return m + std::log(0.5 * (std::exp(a - m) + std::exp(b - m)));
    };
    return t;
}

double quadrature_log_z(const PotentialTarget& target, double step) {
    // sum exp(U) over a regular grid, max-shifted for stability
    const double lo = target.box_lo, hi = target.box_hi;
    const long n = std::lround((hi - lo) / step);
    double max_u = -1e300;
    for (long i = 0; i <= n; ++i)
        for (long j = 0; j <= n; ++j) {
            const double u = target.log_u(lo + i * step, lo + j * step);
            max_u = std::max(max_u, u);
        }
    double s = 0.0;
    for (long i = 0; i <= n; ++i)
        for (long j = 0; j <= n; ++j)
            s += std::exp(target.log_u(lo + i * step, lo + j * step) - max_u);
    return max_u + std::log(s) + 2.0 * std::log(step);
}

namespace {

std::uint32_t read_be_u32(std::ifstream& f, const std::string& path) {
    unsigned char buf[4];
    if (!f.read(reinterpret_cast<char*>(buf), 4))
        throw std::runtime_error(path + ": truncated IDX file");
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

Tensor load_idx(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open");
    const std::uint32_t magic = read_be_u32(f, path);
    if (magic == 0x00000801u) {  // labels
        const std::uint32_t n = read_be_u32(f, path);
        std::vector<unsigned char> raw(n);
        if (!f.read(reinterpret_cast<char*>(raw.data()), n))
            throw std::runtime_error(path + ": truncated IDX file");
        Tensor t({(std::size_t)n});
        for (std::uint32_t i = 0; i < n; ++i) t.at(i) = raw[i];
        return t;
    }
    if (magic == 0x00000803u) {  // images
        const std::uint32_t n = read_be_u32(f, path);
        const std::uint32_t rows = read_be_u32(f, path);
        const std::uint32_t cols = read_be_u32(f, path);
        const std::size_t d = (std::size_t)rows * cols;
        std::vector<unsigned char> raw((std::size_t)n * d);
        if (!f.read(reinterpret_cast<char*>(raw.data()), (std::streamsize)raw.size()))
            throw std::runtime_error(path + ": truncated IDX file");
        Tensor t({(std::size_t)n, d});
        for (std::size_t i = 0; i < raw.size(); ++i) t.at(i) = raw[i] / 255.0;
        return t;
    }
    throw std::runtime_error(path + ": bad magic");
}

MnistData preprocess_mnist(const Tensor& images, const Tensor& labels,
                           double pixel_std_threshold) {
    if (images.rank() != 2) throw std::invalid_argument("preprocess: [N x d] images required");
    const std::size_t n = images.dim(0), d = images.dim(1);
    if (labels.numel() != n) throw std::invalid_argument("preprocess: label count mismatch");

    MnistData out;
    // column std over raw intensities, before any binarization
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += images.at(i, j);
        mean /= (double)n;
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = images.at(i, j) - mean;
            var += c * c;
        }
        var /= (double)n;
        if (std::sqrt(var) >= pixel_std_threshold) out.kept_columns.push_back((int)j);
    }
    out.data.x = apply_columns(images, out.kept_columns);
    out.data.y.resize(n);
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out.data.y[i] = (int)std::lround(labels.at(i));
        max_label = std::max(max_label, out.data.y[i]);
    }
    out.data.n_classes = max_label + 1;
    out.data.binary_observations = true;
    return out;
}

Tensor apply_columns(const Tensor& images, const std::vector<int>& kept_columns) {
    const std::size_t n = images.dim(0);
    Tensor out({n, kept_columns.size()});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < kept_columns.size(); ++k)
            out.at(i, k) = images.at(i, (std::size_t)kept_columns[k]);
    return out;
}

Tensor binarize(const Tensor& x, RngStream rng) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double p = x.at(i);
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("binarize: intensities must lie in [0, 1]");
        out.at(i) = rng.uniform() < p ? 1.0 : 0.0;
    }
    return out;
}

Tensor dequantize_and_normalize(const Tensor& x_int, RngStream rng, double divisor) {
    Tensor out(x_int.shape());
    for (std::size_t i = 0; i < x_int.numel(); ++i)
        out.at(i) = (x_int.at(i) + rng.uniform()) / divisor;
    return out;
}

}  // namespace axdg
