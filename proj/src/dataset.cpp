#include "trire/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "trire/errors.hpp"
#include "trire/idx.hpp"

namespace trire {

int TaskStream::task_of_class(int cls) const {
    for (const auto& t : tasks) {
        for (int c : t.spec.classes) {
            if (c == cls) return t.spec.task_id;
        }
    }
    return -1;
}

std::vector<Example> load_idx(const std::string& images_path, const std::string& labels_path) {
    const IdxImages images = load_idx_images(images_path);
    const IdxLabels labels = load_idx_labels(labels_path);
    if (images.count != labels.count) {
        throw DataError(images_path + ": " + std::to_string(images.count) +
                        " images vs " + std::to_string(labels.count) + " labels in " +
                        labels_path);
    }
    const std::size_t dim = std::size_t(images.rows) * images.cols;
    std::vector<Example> out(images.count);
    for (std::size_t i = 0; i < images.count; ++i) {
        out[i].features.resize(dim);
        const std::uint8_t* px = images.pixels.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j) {
            out[i].features[j] = static_cast<double>(px[j]) / 255.0;
        }
        out[i].label = static_cast<int>(labels.labels[i]);
    }
    return out;
}

namespace {

std::vector<int> distinct_labels(const std::vector<Example>& examples) {
    std::set<int> s;
    for (const auto& e : examples) s.insert(e.label);
    return std::vector<int>(s.begin(), s.end());
}

} // namespace

TaskStream build_split_tasks(const LabeledDataset& dataset, std::size_t num_tasks,
                             std::size_t classes_per_task, std::uint64_t seed,
                             TaskOrder order) {
    std::vector<int> classes = distinct_labels(dataset.train);
    if (num_tasks * classes_per_task > classes.size()) {
        throw InputError("build_split_tasks: need " +
                         std::to_string(num_tasks * classes_per_task) +
                         " classes, dataset has " + std::to_string(classes.size()));
    }
    RngState rng(seed);
    if (order == TaskOrder::Shuffled) {
        RngState assign = rng.fork(0);
        assign.shuffle(classes);
    }

    auto train_store = std::make_shared<const std::vector<Example>>(dataset.train);
    auto test_store = std::make_shared<const std::vector<Example>>(dataset.test);

    TaskStream stream;
    stream.feature_dim = dataset.feature_dim;
    int max_class = 0;
    for (std::size_t t = 0; t < num_tasks; ++t) {
        Task task;
        task.spec.task_id = static_cast<int>(t);
        task.spec.classes.assign(classes.begin() + static_cast<std::ptrdiff_t>(t * classes_per_task),
                                 classes.begin() + static_cast<std::ptrdiff_t>((t + 1) * classes_per_task));
        std::set<int> members(task.spec.classes.begin(), task.spec.classes.end());
        task.train.store = train_store;
        task.test.store = test_store;
        for (std::uint32_t i = 0; i < train_store->size(); ++i) {
            if (members.count((*train_store)[i].label)) task.train.indices.push_back(i);
        }
        for (std::uint32_t i = 0; i < test_store->size(); ++i) {
            if (members.count((*test_store)[i].label)) task.test.indices.push_back(i);
        }
        RngState shuffle_rng = rng.fork(1 + t);
        shuffle_rng.shuffle(task.train.indices);
        for (int c : task.spec.classes) max_class = std::max(max_class, c);
        stream.tasks.push_back(std::move(task));
    }
    stream.num_classes = static_cast<std::size_t>(max_class) + 1;
    return stream;
}

LabeledDataset synthetic_blobs(std::size_t num_tasks, std::size_t classes_per_task,
                               std::size_t dim, std::size_t train_per_class,
                               std::size_t test_per_class, double separation,
                               std::uint64_t seed) {
    if (separation <= 0.0) throw InputError("synthetic_blobs: separation must be > 0");
    if (dim == 0) throw InputError("synthetic_blobs: dim must be >= 1");
    const std::size_t num_classes = num_tasks * classes_per_task;
    RngState rng(seed);
    RngState center_rng = rng.fork(0);
    std::vector<std::vector<double>> centers(num_classes, std::vector<double>(dim));
    for (auto& c : centers) {
        for (double& v : c) v = 0.15 + 0.7 * center_rng.uniform01();
    }
    const double sigma = 0.25 / separation;

    LabeledDataset ds;
    ds.feature_dim = dim;
    ds.num_classes = num_classes;
    auto draw = [&](RngState& r, int cls) {
        Example e;
        e.label = cls;
        e.features.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            e.features[j] = std::clamp(centers[static_cast<std::size_t>(cls)][j] +
                                           sigma * r.normal(),
                                       0.0, 1.0);
        }
        return e;
    };
    for (std::size_t c = 0; c < num_classes; ++c) {
        RngState class_rng = rng.fork(1 + c);
        for (std::size_t i = 0; i < train_per_class; ++i) {
            ds.train.push_back(draw(class_rng, static_cast<int>(c)));
        }
        for (std::size_t i = 0; i < test_per_class; ++i) {
            ds.test.push_back(draw(class_rng, static_cast<int>(c)));
        }
    }
    return ds;
}

namespace {

struct Seg {
    double x0, y0, x1, y1;
};

// Stroke skeletons in a unit glyph box (y grows downward). Each digit has
// several handwriting variants; per-class multimodality keeps a small
// rehearsal buffer from covering the class with a handful of exemplars.
using Variant = std::vector<Seg>;

const std::vector<std::vector<Variant>>& digit_strokes() {
    static const std::vector<std::vector<Variant>> strokes = {
        // 0: oval / narrow box / slashed
        {{{0.30, 0.14, 0.70, 0.14}, {0.70, 0.14, 0.74, 0.50}, {0.74, 0.50, 0.70, 0.86},
          {0.70, 0.86, 0.30, 0.86}, {0.30, 0.86, 0.26, 0.50}, {0.26, 0.50, 0.30, 0.14}},
         {{0.36, 0.12, 0.62, 0.14}, {0.62, 0.14, 0.64, 0.86}, {0.64, 0.86, 0.38, 0.88},
          {0.38, 0.88, 0.34, 0.50}, {0.34, 0.50, 0.36, 0.12}},
         {{0.32, 0.18, 0.68, 0.14}, {0.68, 0.14, 0.72, 0.52}, {0.72, 0.52, 0.66, 0.86},
          {0.66, 0.86, 0.32, 0.84}, {0.32, 0.84, 0.28, 0.48}, {0.28, 0.48, 0.32, 0.18},
          {0.66, 0.22, 0.34, 0.78}}},
        // 1: flagged / bare stem / slanted with serif
        {{{0.36, 0.26, 0.54, 0.12}, {0.54, 0.12, 0.54, 0.88}, {0.36, 0.88, 0.72, 0.88}},
         {{0.52, 0.12, 0.50, 0.88}},
         {{0.34, 0.30, 0.58, 0.10}, {0.58, 0.10, 0.46, 0.88}, {0.32, 0.88, 0.62, 0.86}}},
        // 2: round top / loopy / angular Z
        {{{0.28, 0.24, 0.46, 0.12}, {0.46, 0.12, 0.68, 0.16}, {0.68, 0.16, 0.72, 0.36},
          {0.72, 0.36, 0.28, 0.86}, {0.28, 0.86, 0.76, 0.86}},
         {{0.30, 0.30, 0.38, 0.14}, {0.38, 0.14, 0.62, 0.12}, {0.62, 0.12, 0.70, 0.28},
          {0.70, 0.28, 0.56, 0.52}, {0.56, 0.52, 0.30, 0.80}, {0.30, 0.80, 0.36, 0.88},
          {0.36, 0.88, 0.74, 0.84}},
         {{0.28, 0.16, 0.70, 0.14}, {0.70, 0.14, 0.70, 0.40}, {0.70, 0.40, 0.28, 0.84},
          {0.28, 0.84, 0.74, 0.86}}},
        // 3: double bowl / flat top / deep waist
        {{{0.28, 0.14, 0.72, 0.14}, {0.72, 0.14, 0.48, 0.44}, {0.48, 0.44, 0.72, 0.58},
          {0.72, 0.58, 0.70, 0.80}, {0.70, 0.80, 0.44, 0.88}, {0.44, 0.88, 0.26, 0.80}},
         {{0.28, 0.12, 0.72, 0.12}, {0.72, 0.12, 0.70, 0.44}, {0.70, 0.44, 0.42, 0.46},
          {0.42, 0.46, 0.70, 0.50}, {0.70, 0.50, 0.72, 0.84}, {0.72, 0.84, 0.28, 0.86}},
         {{0.30, 0.22, 0.48, 0.12}, {0.48, 0.12, 0.68, 0.20}, {0.68, 0.20, 0.54, 0.42},
          {0.54, 0.42, 0.70, 0.62}, {0.70, 0.62, 0.56, 0.86}, {0.56, 0.86, 0.30, 0.78}}},
        // 4: open / closed triangle / short arm
        {{{0.64, 0.88, 0.64, 0.12}, {0.64, 0.12, 0.26, 0.60}, {0.26, 0.60, 0.78, 0.60}},
         {{0.60, 0.12, 0.30, 0.58}, {0.30, 0.58, 0.76, 0.58}, {0.60, 0.12, 0.62, 0.88}},
         {{0.66, 0.16, 0.66, 0.86}, {0.66, 0.16, 0.38, 0.52}, {0.38, 0.52, 0.80, 0.52},
          {0.30, 0.70, 0.52, 0.68}}},
        // 5: round / boxy / long hat
        {{{0.72, 0.12, 0.32, 0.12}, {0.32, 0.12, 0.30, 0.46}, {0.30, 0.46, 0.58, 0.42},
          {0.58, 0.42, 0.72, 0.56}, {0.72, 0.56, 0.70, 0.80}, {0.70, 0.80, 0.44, 0.88},
          {0.44, 0.88, 0.26, 0.80}},
         {{0.70, 0.14, 0.34, 0.14}, {0.34, 0.14, 0.34, 0.48}, {0.34, 0.48, 0.68, 0.48},
          {0.68, 0.48, 0.68, 0.84}, {0.68, 0.84, 0.30, 0.84}},
         {{0.78, 0.10, 0.30, 0.14}, {0.30, 0.14, 0.32, 0.42}, {0.32, 0.42, 0.62, 0.40},
          {0.62, 0.40, 0.74, 0.58}, {0.74, 0.58, 0.66, 0.84}, {0.66, 0.84, 0.34, 0.88}}},
        // 6: curled / straight stem / big loop
        {{{0.64, 0.12, 0.38, 0.34}, {0.38, 0.34, 0.28, 0.62}, {0.28, 0.62, 0.34, 0.86},
          {0.34, 0.86, 0.64, 0.86}, {0.64, 0.86, 0.72, 0.66}, {0.72, 0.66, 0.60, 0.52},
          {0.60, 0.52, 0.30, 0.58}},
         {{0.44, 0.12, 0.36, 0.50}, {0.36, 0.50, 0.34, 0.70}, {0.34, 0.70, 0.44, 0.86},
          {0.44, 0.86, 0.66, 0.84}, {0.66, 0.84, 0.70, 0.64}, {0.70, 0.64, 0.56, 0.54},
          {0.56, 0.54, 0.36, 0.60}},
         {{0.68, 0.14, 0.40, 0.30}, {0.40, 0.30, 0.26, 0.58}, {0.26, 0.58, 0.32, 0.84},
          {0.32, 0.84, 0.60, 0.88}, {0.60, 0.88, 0.74, 0.70}, {0.74, 0.70, 0.70, 0.50},
          {0.70, 0.50, 0.46, 0.44}, {0.46, 0.44, 0.28, 0.56}}},
        // 7: crossbar / bare / hooked
        {{{0.26, 0.12, 0.76, 0.12}, {0.76, 0.12, 0.44, 0.88}, {0.38, 0.50, 0.66, 0.50}},
         {{0.26, 0.14, 0.76, 0.12}, {0.76, 0.12, 0.48, 0.88}},
         {{0.28, 0.20, 0.40, 0.10}, {0.40, 0.10, 0.74, 0.14}, {0.74, 0.14, 0.58, 0.48},
          {0.58, 0.48, 0.50, 0.88}}},
        // 8: two loops / narrow waist / skewed
        {{{0.38, 0.12, 0.62, 0.12}, {0.62, 0.12, 0.68, 0.30}, {0.68, 0.30, 0.50, 0.46},
          {0.50, 0.46, 0.32, 0.30}, {0.32, 0.30, 0.38, 0.12}, {0.50, 0.46, 0.70, 0.64},
          {0.70, 0.64, 0.64, 0.88}, {0.64, 0.88, 0.36, 0.88}, {0.36, 0.88, 0.30, 0.64},
          {0.30, 0.64, 0.50, 0.46}},
         {{0.42, 0.10, 0.58, 0.10}, {0.58, 0.10, 0.62, 0.28}, {0.62, 0.28, 0.52, 0.48},
          {0.52, 0.48, 0.40, 0.28}, {0.40, 0.28, 0.42, 0.10}, {0.52, 0.48, 0.66, 0.70},
          {0.66, 0.70, 0.58, 0.90}, {0.58, 0.90, 0.40, 0.90}, {0.40, 0.90, 0.34, 0.68},
          {0.34, 0.68, 0.52, 0.48}},
         {{0.46, 0.12, 0.66, 0.16}, {0.66, 0.16, 0.62, 0.34}, {0.62, 0.34, 0.46, 0.46},
          {0.46, 0.46, 0.34, 0.32}, {0.34, 0.32, 0.46, 0.12}, {0.46, 0.46, 0.62, 0.62},
          {0.62, 0.62, 0.66, 0.84}, {0.66, 0.84, 0.42, 0.88}, {0.42, 0.88, 0.32, 0.70},
          {0.32, 0.70, 0.46, 0.46}}},
        // 9: curled tail / straight tail / hooked tail
        {{{0.66, 0.46, 0.38, 0.50}, {0.38, 0.50, 0.28, 0.32}, {0.28, 0.32, 0.40, 0.14},
          {0.40, 0.14, 0.62, 0.12}, {0.62, 0.12, 0.70, 0.30}, {0.70, 0.30, 0.66, 0.46},
          {0.66, 0.46, 0.58, 0.88}},
         {{0.64, 0.42, 0.40, 0.46}, {0.40, 0.46, 0.30, 0.28}, {0.30, 0.28, 0.44, 0.12},
          {0.44, 0.12, 0.64, 0.14}, {0.64, 0.14, 0.68, 0.30}, {0.68, 0.30, 0.64, 0.42},
          {0.64, 0.42, 0.66, 0.88}},
         {{0.62, 0.44, 0.38, 0.48}, {0.38, 0.48, 0.28, 0.30}, {0.28, 0.30, 0.42, 0.12},
          {0.42, 0.12, 0.64, 0.14}, {0.64, 0.14, 0.70, 0.32}, {0.70, 0.32, 0.62, 0.44},
          {0.62, 0.44, 0.62, 0.78}, {0.62, 0.78, 0.44, 0.88}, {0.44, 0.88, 0.32, 0.80}}},
    };
    return strokes;
}

double dist_to_seg(double px, double py, const Seg& s) {
    const double dx = s.x1 - s.x0;
    const double dy = s.y1 - s.y0;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double cx = s.x0 + t * dx;
    const double cy = s.y0 + t * dy;
    return std::hypot(px - cx, py - cy);
}

Example render_digit(int digit, RngState& rng) {
    constexpr std::size_t kSide = 28;
    const auto& variants = digit_strokes()[static_cast<std::size_t>(digit)];
    const auto& strokes =
        variants[static_cast<std::size_t>(rng.uniform_below(variants.size()))];

    // Per-sample affine jitter around the glyph center.
    const double angle = (rng.uniform01() - 0.5) * 0.55;
    const double sx = 0.75 + 0.42 * rng.uniform01();
    const double sy = 0.75 + 0.42 * rng.uniform01();
    const double shear = (rng.uniform01() - 0.5) * 0.40;
    const double tx = (rng.uniform01() - 0.5) * 0.22;
    const double ty = (rng.uniform01() - 0.5) * 0.22;
    const double thickness = 0.036 + 0.044 * rng.uniform01();
    const double contrast = 0.68 + 0.32 * rng.uniform01();
    const double noise = 0.11;

    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    std::vector<Seg> placed(strokes.size());
    auto map_point = [&](double x, double y, double& ox, double& oy) {
        double u = (x - 0.5) * sx + shear * (y - 0.5);
        double v = (y - 0.5) * sy;
        ox = 0.5 + ca * u - sa * v + tx;
        oy = 0.5 + sa * u + ca * v + ty;
    };
    for (std::size_t i = 0; i < strokes.size(); ++i) {
        map_point(strokes[i].x0, strokes[i].y0, placed[i].x0, placed[i].y0);
        map_point(strokes[i].x1, strokes[i].y1, placed[i].x1, placed[i].y1);
    }

    Example e;
    e.label = digit;
    e.features.resize(kSide * kSide);
    constexpr double blur = 0.030;
    for (std::size_t py = 0; py < kSide; ++py) {
        for (std::size_t px = 0; px < kSide; ++px) {
            const double x = (static_cast<double>(px) + 0.5) / kSide;
            const double y = (static_cast<double>(py) + 0.5) / kSide;
            double d = HUGE_VAL;
            for (const auto& s : placed) d = std::min(d, dist_to_seg(x, y, s));
            double v = std::clamp((thickness - d) / blur + 0.5, 0.0, 1.0) * contrast;
            v += noise * rng.normal();
            v = std::clamp(v, 0.0, 1.0);
            // Quantize to the byte grid so IDX round trips are exact.
            e.features[py * kSide + px] = std::round(v * 255.0) / 255.0;
        }
    }
    return e;
}

} // namespace

LabeledDataset synthetic_digits(std::size_t train_per_class, std::size_t test_per_class,
                                std::uint64_t seed) {
    LabeledDataset ds;
    ds.feature_dim = 28 * 28;
    ds.num_classes = 10;
    RngState rng(seed);
    for (int digit = 0; digit < 10; ++digit) {
        RngState digit_rng = rng.fork(static_cast<std::uint64_t>(digit));
        for (std::size_t i = 0; i < train_per_class; ++i) {
            ds.train.push_back(render_digit(digit, digit_rng));
        }
        for (std::size_t i = 0; i < test_per_class; ++i) {
            ds.test.push_back(render_digit(digit, digit_rng));
        }
    }
    // Interleave classes so streamed consumers see a mixed order.
    RngState order_rng = rng.fork(100);
    order_rng.shuffle(ds.train);
    order_rng.shuffle(ds.test);
    return ds;
}

ValidationCarve carve_validation(TaskStream& stream, double fraction) {
    if (fraction < 0.0 || fraction >= 1.0) {
        throw InputError("carve_validation: fraction must lie in [0,1)");
    }
    ValidationCarve carve;
    for (auto& task : stream.tasks) {
        const std::size_t n = task.train.size();
        const std::size_t n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
        Split val;
        val.store = task.train.store;
        val.indices.assign(task.train.indices.end() - static_cast<std::ptrdiff_t>(n_val),
                           task.train.indices.end());
        task.train.indices.resize(n - n_val);
        carve.validation.push_back(std::move(val));
    }
    return carve;
}

Batch make_batch(const Split& split, const std::vector<std::uint32_t>& which) {
    Batch b;
    if (which.empty()) return b;
    const std::size_t dim = split.at(0).features.size();
    b.features = Matrix(which.size(), dim);
    b.labels.resize(which.size());
    for (std::size_t i = 0; i < which.size(); ++i) {
        const Example& e = (*split.store)[which[i]];
        std::copy(e.features.begin(), e.features.end(), b.features.row_ptr(i));
        b.labels[i] = e.label;
    }
    return b;
}

MinibatchIter::MinibatchIter(const Split& split, std::size_t batch_size, RngState rng)
    : split_(&split), batch_size_(batch_size) {
    if (batch_size == 0) throw InputError("minibatches: batch size must be >= 1");
    order_ = split.indices;
    rng.shuffle(order_);
}

bool MinibatchIter::next(Batch& out) {
    if (pos_ >= order_.size()) return false;
    const std::size_t end = std::min(pos_ + batch_size_, order_.size());
    std::vector<std::uint32_t> which(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                     order_.begin() + static_cast<std::ptrdiff_t>(end));
    out = make_batch(*split_, which);
    pos_ = end;
    return true;
}

} // namespace trire
