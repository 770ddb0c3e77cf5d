#include "poisonlab/datakit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace datakit {

namespace {

std::uint32_t read_be_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw format_error("idx: truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

void Dataset::validate() const {
    if (inputs.shape.size() != 2) throw std::invalid_argument("Dataset: inputs not 2-D");
    if (size() == 0) throw std::invalid_argument("Dataset: empty");
    if (labels.size() != size())
        throw std::invalid_argument("Dataset: label count mismatch");
    if (num_classes <= 0) throw std::invalid_argument("Dataset: num_classes <= 0");
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument("Dataset: label out of range");
}

std::size_t PoisonedDataset::poison_count() const {
    return static_cast<std::size_t>(
        std::count(poison_mask.begin(), poison_mask.end(), std::uint8_t{1}));
}

double PoisonedDataset::intensity() const {
    std::size_t p = poison_count();
    std::size_t c = base.size() - p;
    if (c == 0) throw std::invalid_argument("intensity: no clean samples");
    return static_cast<double>(p) / static_cast<double>(c);
}

PoisonedDataset as_clean(Dataset ds) {
    PoisonedDataset out;
    out.poison_mask.assign(ds.size(), 0);
    out.base = std::move(ds);
    return out;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw format_error("idx: cannot open " + images_path);
    if (read_be_u32(img) != kIdxImagesMagic)
        throw format_error("idx: bad image magic in " + images_path);
    std::uint32_t n = read_be_u32(img);
    std::uint32_t h = read_be_u32(img);
    std::uint32_t w = read_be_u32(img);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw format_error("idx: cannot open " + labels_path);
    if (read_be_u32(lab) != kIdxLabelsMagic)
        throw format_error("idx: bad label magic in " + labels_path);
    std::uint32_t nl = read_be_u32(lab);
    if (n != nl) throw format_error("idx: image/label count mismatch");
    if (n == 0) throw format_error("idx: empty file");

    std::size_t d = std::size_t(h) * w;
    std::vector<unsigned char> pix(std::size_t(n) * d);
    img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
    if (!img) throw format_error("idx: truncated image data");
    std::vector<unsigned char> lbl(n);
    lab.read(reinterpret_cast<char*>(lbl.data()), static_cast<std::streamsize>(lbl.size()));
    if (!lab) throw format_error("idx: truncated label data");

    Dataset ds;
    std::vector<double> vals(pix.size());
    for (std::size_t i = 0; i < pix.size(); ++i) vals[i] = pix[i] / 255.0;
    ds.inputs = numkit::Tensor({n, d}, std::move(vals));
    ds.labels.assign(lbl.begin(), lbl.end());
    ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    ds.name = "idx";
    ds.validate();
    return ds;
}

void save_idx(const Dataset& ds, std::size_t img_h, std::size_t img_w,
              const std::string& images_path, const std::string& labels_path) {
    ds.validate();
    if (img_h * img_w != ds.dim())
        throw std::invalid_argument("save_idx: h*w != feature dimension");
    std::ofstream img(images_path, std::ios::binary);
    write_be_u32(img, kIdxImagesMagic);
    write_be_u32(img, static_cast<std::uint32_t>(ds.size()));
    write_be_u32(img, static_cast<std::uint32_t>(img_h));
    write_be_u32(img, static_cast<std::uint32_t>(img_w));
    for (double v : ds.inputs.values) {
        double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
        img.put(static_cast<char>(std::lround(scaled)));
    }
    std::ofstream lab(labels_path, std::ios::binary);
    write_be_u32(lab, kIdxLabelsMagic);
    write_be_u32(lab, static_cast<std::uint32_t>(ds.size()));
    for (int y : ds.labels) lab.put(static_cast<char>(y));
}

namespace {

Dataset make_moons(std::size_t n, double noise_std, numkit::Rng& rng,
                   const std::string& name) {
    std::size_t n0 = (n + 1) / 2;
    std::vector<double> vals;
    vals.reserve(n * 2);
    std::vector<int> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        int y = i < n0 ? 0 : 1;
        double t = M_PI * rng.next_double();
        double px, py;
        if (y == 0) {
            px = std::cos(t);
            py = std::sin(t);
        } else {
            px = 1.0 - std::cos(t);
            py = 0.5 - std::sin(t);
        }
        px += noise_std * rng.next_gaussian();
        py += noise_std * rng.next_gaussian();
        vals.push_back(px);
        vals.push_back(py);
        labels.push_back(y);
    }
    Dataset ds;
    ds.inputs = numkit::Tensor({n, 2}, std::move(vals));
    ds.labels = std::move(labels);
    ds.num_classes = 2;
    ds.name = name;
    return ds;
}

}  // namespace

std::pair<Dataset, Dataset> two_moons(std::size_t n_train, std::size_t n_test,
                                      double noise_std, std::uint64_t seed) {
    if (n_train < 1 || n_test < 1)
        throw std::invalid_argument("two_moons: need at least one sample per split");
    if (noise_std < 0) throw std::invalid_argument("two_moons: negative noise_std");
    numkit::Rng rng(seed);
    Dataset train = make_moons(n_train, noise_std, rng, "two_moons_train");
    Dataset test = make_moons(n_test, noise_std, rng, "two_moons_test");
    return {std::move(train), std::move(test)};
}

namespace {

Dataset make_purchase(std::size_t n, const std::vector<double>& protos,
                      std::size_t d, int num_classes, double flip_prob,
                      numkit::Rng& rng, const std::string& name) {
    std::vector<double> vals(n * d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        int y = static_cast<int>(i % static_cast<std::size_t>(num_classes));
        labels[i] = y;
        const double* p = protos.data() + std::size_t(y) * d;
        for (std::size_t j = 0; j < d; ++j) {
            double bit = p[j];
            if (rng.next_double() < flip_prob) bit = 1.0 - bit;
            vals[i * d + j] = bit;
        }
    }
    Dataset ds;
    ds.inputs = numkit::Tensor({n, d}, std::move(vals));
    ds.labels = std::move(labels);
    ds.num_classes = num_classes;
    ds.name = name;
    return ds;
}

}  // namespace

std::pair<Dataset, Dataset> purchase_like(std::size_t n_train, std::size_t n_test,
                                          std::size_t d, int num_classes,
                                          std::uint64_t seed, double flip_prob) {
    if (num_classes < 1 || static_cast<std::size_t>(num_classes) > n_train)
        throw std::invalid_argument("purchase_like: num_classes must be in [1, n_train]");
    if (flip_prob < 0.0 || flip_prob >= 0.5)
        throw std::invalid_argument("purchase_like: flip_prob must be in [0, 0.5)");
    numkit::Rng rng(seed);
    std::vector<double> protos(std::size_t(num_classes) * d);
    for (double& b : protos) b = rng.next_double() < 0.5 ? 0.0 : 1.0;
    Dataset train = make_purchase(n_train, protos, d, num_classes, flip_prob, rng,
                                  "purchase_like_train");
    Dataset test = make_purchase(n_test, protos, d, num_classes, flip_prob, rng,
                                 "purchase_like_test");
    return {std::move(train), std::move(test)};
}

namespace {

// Within-class variation is kept low-rank on purpose: a per-sample intensity
// factor plus a few shared smooth style fields, with only mild per-pixel
// noise on top. Samples of a class are therefore strongly correlated, as in
// real image data, instead of being mutually near-orthogonal noise shells.
// Circular support mask: objects sit on an exactly black background, as in
// image corpora of centered objects. Pixels outside the disk are identically
// zero in every sample, so no classifier weight can ever act on them; a
// graded falloff instead would leave low-variance dims that adaptive
// optimizers exploit to memorize individual samples.
std::vector<double> make_vignette(std::size_t img_h, std::size_t img_w) {
    std::vector<double> m(img_h * img_w);
    double ch = 0.5 * static_cast<double>(img_h - 1);
    double cw = 0.5 * static_cast<double>(img_w - 1);
    for (std::size_t r = 0; r < img_h; ++r)
        for (std::size_t c = 0; c < img_w; ++c) {
            double dy = (static_cast<double>(r) - ch) / (0.5 * static_cast<double>(img_h));
            double dx = (static_cast<double>(c) - cw) / (0.5 * static_cast<double>(img_w));
            m[r * img_w + c] = dx * dx + dy * dy <= 0.81 ? 1.0 : 0.0;
        }
    return m;
}

Dataset make_images(std::size_t n, const std::vector<double>& protos,
                    const std::vector<double>& styles, std::size_t n_styles,
                    std::size_t img_h, std::size_t img_w, int num_classes,
                    double noise_std, numkit::Rng& rng, const std::string& name) {
    const double base = 0.35;
    const std::size_t d = img_h * img_w;
    std::vector<double> vig = make_vignette(img_h, img_w);
    std::vector<double> vals(n * d);
    std::vector<int> labels(n);
    std::vector<double> coeff(n_styles);
    for (std::size_t i = 0; i < n; ++i) {
        int y = static_cast<int>(i % static_cast<std::size_t>(num_classes));
        labels[i] = y;
        const double* p = protos.data() + std::size_t(y) * d;
        double intensity = 1.0 + 0.3 * rng.next_gaussian();
        for (std::size_t k = 0; k < n_styles; ++k) coeff[k] = 0.2 * rng.next_gaussian();
        for (std::size_t j = 0; j < d; ++j) {
            double v = base + intensity * (p[j] - base);
            for (std::size_t k = 0; k < n_styles; ++k) v += coeff[k] * styles[k * d + j];
            v += noise_std * rng.next_gaussian();
            vals[i * d + j] = vig[j] * std::clamp(v, 0.0, 1.0);
        }
    }
    Dataset ds;
    ds.inputs = numkit::Tensor({n, d}, std::move(vals));
    ds.labels = std::move(labels);
    ds.num_classes = num_classes;
    ds.name = name;
    return ds;
}

// Smooth zero-mean bump field used as a shared style direction.
std::vector<double> make_style_field(std::size_t img_h, std::size_t img_w,
                                     numkit::Rng& rng) {
    std::size_t d = img_h * img_w;
    std::vector<double> f(d, 0.0);
    int bumps = 2 + static_cast<int>(rng.next_below(3));
    for (int b = 0; b < bumps; ++b) {
        double cy = rng.next_double() * static_cast<double>(img_h);
        double cx = rng.next_double() * static_cast<double>(img_w);
        double amp = rng.next_gaussian();
        double s = 2.0 + 3.0 * rng.next_double();
        for (std::size_t r = 0; r < img_h; ++r)
            for (std::size_t col = 0; col < img_w; ++col) {
                double dy = static_cast<double>(r) - cy;
                double dx = static_cast<double>(col) - cx;
                f[r * img_w + col] += amp * std::exp(-(dx * dx + dy * dy) / (2 * s * s));
            }
    }
    return f;
}

}  // namespace

std::pair<Dataset, Dataset> synthetic_images(std::size_t n_train, std::size_t n_test,
                                             std::size_t img_h, std::size_t img_w,
                                             int num_classes, std::uint64_t seed,
                                             double noise_std, double pattern_scale) {
    if (n_train < 1 || n_test < 1)
        throw std::invalid_argument("synthetic_images: need at least one sample per split");
    if (num_classes < 1) throw std::invalid_argument("synthetic_images: num_classes < 1");
    numkit::Rng rng(seed);
    std::size_t d = img_h * img_w;
    // Per-class prototype: a handful of smooth Gaussian bumps on a gray base.
    std::vector<double> protos(std::size_t(num_classes) * d, 0.35);
    for (int c = 0; c < num_classes; ++c) {
        double* p = protos.data() + std::size_t(c) * d;
        int bumps = 3 + static_cast<int>(rng.next_below(3));
        for (int b = 0; b < bumps; ++b) {
            double cy = rng.next_double() * static_cast<double>(img_h);
            double cx = rng.next_double() * static_cast<double>(img_w);
            double amp = pattern_scale * (0.5 + rng.next_double());
            double s = 1.5 + 2.5 * rng.next_double();
            for (std::size_t r = 0; r < img_h; ++r)
                for (std::size_t col = 0; col < img_w; ++col) {
                    double dy = static_cast<double>(r) - cy;
                    double dx = static_cast<double>(col) - cx;
                    p[r * img_w + col] += amp * std::exp(-(dx * dx + dy * dy) / (2 * s * s));
                }
        }
        for (std::size_t j = 0; j < d; ++j) p[j] = std::clamp(p[j], 0.0, 1.0);
    }
    const std::size_t n_styles = 4;
    std::vector<double> styles;
    for (std::size_t k = 0; k < n_styles; ++k) {
        std::vector<double> f = make_style_field(img_h, img_w, rng);
        styles.insert(styles.end(), f.begin(), f.end());
    }
    Dataset train = make_images(n_train, protos, styles, n_styles, img_h, img_w,
                                num_classes, noise_std, rng, "synthetic_images_train");
    Dataset test = make_images(n_test, protos, styles, n_styles, img_h, img_w,
                               num_classes, noise_std, rng, "synthetic_images_test");
    return {std::move(train), std::move(test)};
}

Dataset binary_subset(const Dataset& ds, int class_a, int class_b,
                      std::size_t per_class) {
    ds.validate();
    if (class_a == class_b)
        throw std::invalid_argument("binary_subset: classes must differ");
    if (class_a < 0 || class_a >= ds.num_classes || class_b < 0 ||
        class_b >= ds.num_classes)
        throw std::invalid_argument("binary_subset: class out of range");
    if (per_class < 1) throw std::invalid_argument("binary_subset: per_class < 1");

    std::size_t d = ds.dim();
    std::vector<double> vals;
    vals.reserve(2 * per_class * d);
    std::vector<int> labels;
    labels.reserve(2 * per_class);
    std::size_t got_a = 0, got_b = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        int y = ds.labels[i];
        int newy;
        if (y == class_a && got_a < per_class) {
            newy = 0;
            ++got_a;
        } else if (y == class_b && got_b < per_class) {
            newy = 1;
            ++got_b;
        } else {
            continue;
        }
        auto r = ds.inputs.row(i);
        vals.insert(vals.end(), r.begin(), r.end());
        labels.push_back(newy);
    }
    if (got_a < per_class || got_b < per_class)
        throw std::invalid_argument("binary_subset: not enough samples in a class");
    Dataset out;
    out.inputs = numkit::Tensor({labels.size(), d}, std::move(vals));
    out.labels = std::move(labels);
    out.num_classes = 2;
    out.name = ds.name + "_binary";
    return out;
}

PoisonedDataset merge_with_poisons(const Dataset& clean, const Dataset& poisons,
                                   std::uint64_t shuffle_seed) {
    clean.validate();
    std::size_t np = poisons.size();
    if (np > 0) {
        poisons.validate();
        if (poisons.dim() != clean.dim() || poisons.num_classes != clean.num_classes)
            throw std::invalid_argument("merge_with_poisons: dimension mismatch");
    }
    std::size_t n = clean.size() + np;
    std::size_t d = clean.dim();

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    numkit::Rng rng(shuffle_seed);
    rng.shuffle(perm);

    std::vector<double> vals(n * d);
    std::vector<int> labels(n);
    std::vector<std::uint8_t> mask(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t src = perm[i];
        const Dataset& from = src < clean.size() ? clean : poisons;
        std::size_t j = src < clean.size() ? src : src - clean.size();
        auto r = from.inputs.row(j);
        std::copy(r.begin(), r.end(), vals.begin() + static_cast<std::ptrdiff_t>(i * d));
        labels[i] = from.labels[j];
        mask[i] = src >= clean.size() ? 1 : 0;
    }
    PoisonedDataset out;
    out.base.inputs = numkit::Tensor({n, d}, std::move(vals));
    out.base.labels = std::move(labels);
    out.base.num_classes = clean.num_classes;
    out.base.name = clean.name + "+poisons";
    out.poison_mask = std::move(mask);
    return out;
}

void save_csv(const Dataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path);
    if (!out) throw format_error("save_csv: cannot open " + path);
    out << "label";
    for (std::size_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.labels[i];
        for (double v : ds.inputs.row(i)) out << ',' << v;
        out << "\n";
    }
}

Dataset load_csv(const std::string& path, int num_classes, std::string name) {
    std::ifstream in(path);
    if (!in) throw format_error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw format_error("load_csv: empty file");
    std::vector<double> vals;
    std::vector<int> labels;
    std::size_t d = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ',')) throw format_error("load_csv: bad row");
        labels.push_back(std::stoi(cell));
        std::size_t row_d = 0;
        while (std::getline(ss, cell, ',')) {
            vals.push_back(std::stod(cell));
            ++row_d;
        }
        if (d == 0)
            d = row_d;
        else if (row_d != d)
            throw format_error("load_csv: ragged rows");
    }
    if (labels.empty()) throw format_error("load_csv: no data rows");
    Dataset ds;
    ds.inputs = numkit::Tensor({labels.size(), d}, std::move(vals));
    ds.labels = std::move(labels);
    ds.num_classes = num_classes;
    ds.name = std::move(name);
    ds.validate();
    return ds;
}

}  // namespace datakit
