#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "yunet/cli.hpp"
#include "yunet/data.hpp"
#include "yunet/error.hpp"
#include "yunet/image.hpp"
#include "yunet/metrics.hpp"
#include "yunet/model.hpp"
#include "yunet/skyline.hpp"
#include "yunet/training.hpp"

namespace py = pybind11;
using namespace yunet;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

BinaryMask to_mask(const U8Array& a) {
    if (a.ndim() != 2) throw ShapeError("mask must be a 2-D array");
    BinaryMask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::memcpy(m.values.data(), a.data(), m.values.size());
    return m;
}

U8Array from_mask(const BinaryMask& m) {
    U8Array out({m.height, m.width});
    std::memcpy(out.mutable_data(), m.values.data(), m.values.size());
    return out;
}

RgbImage to_image(const U8Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw ShapeError("image must be an (H, W, 3) array");
    RgbImage img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::memcpy(img.pixels.data(), a.data(), img.pixels.size());
    return img;
}

U8Array from_image(const RgbImage& img) {
    U8Array out({img.height, img.width, 3});
    std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
    return out;
}

Tensor to_tensor(const F32Array& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(shape, std::vector<float>(a.data(), a.data() + a.size()));
}

F32Array from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    F32Array out(shape);
    std::memcpy(out.mutable_data(), t.data(), t.size() * sizeof(float));
    return out;
}

py::array_t<int> rows_of(const SkylineVector& s) { return py::array_t<int>(s.rows.size(), s.rows.data()); }

SkylineVector to_skyline(const py::array_t<int, py::array::c_style | py::array::forcecast>& rows, int height) {
    if (rows.ndim() != 1) throw ShapeError("skyline must be a 1-D array");
    return {height, static_cast<int>(rows.size()), std::vector<int>(rows.data(), rows.data() + rows.size())};
}

py::object opt(const std::optional<double>& v) { return v ? py::object(py::float_(*v)) : py::none(); }

py::dict metrics_dict(const SegmentationCounts& c) {
    const SegmentationMetrics m = segmentation_metrics(c);
    py::dict d;
    d["tp"] = c.tp;
    d["fp"] = c.fp;
    d["tn"] = c.tn;
    d["fn"] = c.fn;
    d["accuracy"] = m.accuracy;
    d["precision"] = opt(m.precision);
    d["recall"] = opt(m.recall);
    d["dice"] = opt(m.dice);
    d["iou"] = opt(m.iou);
    d["mcr"] = m.mcr;
    return d;
}

EdgeParams edge_params(double sobel_threshold, double canny_sigma, double canny_low, double canny_high) {
    return {sobel_threshold, canny_sigma, canny_low, canny_high};
}

int round_up32(int v) { return (v + 31) / 32 * 32; }

BinaryMask predict_image(const Network& net, const RgbImage& image, double threshold, int size) {
    PreprocessSpec spec;
    spec.target_height = size > 0 ? size : round_up32(image.height);
    spec.target_width = size > 0 ? size : round_up32(image.width);
    spec.validate();
    const LetterboxRecord rec = compute_letterbox(image.height, image.width, spec.target_height, spec.target_width);
    const Tensor t = image_to_tensor(letterbox_image(image, rec, spec.fill), spec);
    return resize_nearest(predict_mask(net, t, threshold, &rec), image.height, image.width);
}

py::list history_list(const TrainHistory& history) {
    py::list out;
    for (const EpochRecord& e : history) {
        py::dict d;
        d["epoch"] = e.epoch;
        d["loss"] = e.train_loss;
        d["bce"] = e.train_bce;
        d["dice_loss"] = e.train_dice_loss;
        d["val_iou"] = e.validation ? opt(e.validation->iou) : py::none();
        out.append(d);
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_yunet, m) {
    m.doc() = "Sky segmentation network, skyline extraction and metrics";

    static py::exception<Error> base(m, "Error");
    static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
    static py::exception<DataError> data(m, "DataError", base.ptr());
    static py::exception<ShapeError> shape(m, "ShapeError", base.ptr());
    static py::exception<NumericError> numeric(m, "NumericError", base.ptr());
    static py::exception<IoError> io(m, "IoError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.kind()) {
            case ErrorKind::config: py::set_error(config, e.what()); break;
            case ErrorKind::shape: py::set_error(shape, e.what()); break;
            case ErrorKind::data:
            case ErrorKind::numeric_input:
            case ErrorKind::no_overlap: py::set_error(data, e.what()); break;
            case ErrorKind::numeric: py::set_error(numeric, e.what()); break;
            case ErrorKind::io:
            case ErrorKind::missing_file:
            case ErrorKind::corrupt_container:
            case ErrorKind::spec_mismatch: py::set_error(io, e.what()); break;
            default: py::set_error(base, e.what());
            }
        }
    });

    py::class_<Network>(m, "Network")
        .def(py::init([](const std::string& variant, std::uint64_t seed) { return build_variant(variant, 3, 1, seed); }),
             py::arg("variant") = "n", py::arg("seed") = 0)
        .def_property_readonly("variant", [](const Network& n) { return std::string(to_string(n.spec().variant)); })
        .def_property_readonly("param_count", &Network::param_count)
        .def(
            "forward", [](const Network& n, const F32Array& x) { return from_tensor(n.forward(to_tensor(x))); },
            py::arg("batch"), "Logits (B, 1, H, W) for a float32 (B, 3, H, W) batch.")
        .def(
            "predict",
            [](const Network& n, const U8Array& image, double threshold, int size) {
                return from_mask(predict_image(n, to_image(image), threshold, size));
            },
            py::arg("image"), py::arg("threshold") = 0.5, py::arg("size") = 0,
            "Sky mask at the image's own resolution. size=0 pads to the next multiple of 32.")
        .def("save", [](const Network& n, const std::filesystem::path& path) {
            save_checkpoint(Checkpoint::capture(n, {}, 0, {}), path);
        });

    m.def(
        "load_network", [](const std::filesystem::path& path) { return load_checkpoint(path).restore_network(); },
        py::arg("path"));

    m.def(
        "train",
        [](const std::vector<U8Array>& images, const std::vector<U8Array>& masks, const std::string& variant,
           int epochs, int batch_size, double lr, double momentum, double weight_decay, int size,
           std::uint64_t seed) {
            if (images.size() != masks.size()) throw DataError("images and masks differ in count");
            if (images.empty()) throw DataError("no training samples");
            PreprocessSpec spec;
            spec.target_height = spec.target_width = size;
            spec.validate();
            InMemoryDataset ds(spec);
            for (std::size_t i = 0; i < images.size(); ++i) {
                ds.add(to_image(images[i]), to_mask(masks[i]), std::to_string(i));
            }
            TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = lr;
            cfg.momentum = momentum;
            cfg.weight_decay = weight_decay;
            cfg.seed = seed;
            cfg.validate();
            Network net = build_variant(variant, 3, 1, seed);
            FitResult r;
            {
                py::gil_scoped_release release;
                r = fit(net, ds, cfg);
            }
            return py::make_tuple(std::move(net), history_list(r.history));
        },
        py::arg("images"), py::arg("masks"), py::arg("variant") = "n", py::arg("epochs") = 50,
        py::arg("batch_size") = 4, py::arg("lr") = 0.01, py::arg("momentum") = 0.937,
        py::arg("weight_decay") = 0.0005, py::arg("size") = 64, py::arg("seed") = 0,
        "Returns (network, history).");

    m.def(
        "skyline",
        [](const U8Array& mask, const std::string& method, double sobel_threshold, double canny_sigma,
           double canny_low, double canny_high) {
            return rows_of(extract_skyline(to_mask(mask), parse_skyline_method(method),
                                           edge_params(sobel_threshold, canny_sigma, canny_low, canny_high)));
        },
        py::arg("mask"), py::arg("method") = "scan", py::arg("sobel_threshold") = 0.0, py::arg("canny_sigma") = 1.0,
        py::arg("canny_low") = 0.1, py::arg("canny_high") = 0.2,
        "Row of the first non-sky pixel per column, -1 where the column is all sky.");

    m.def(
        "edge_map",
        [](const U8Array& mask, const std::string& method) {
            if (method != "sobel" && method != "canny") {
                throw ConfigError("edge method must be one of {sobel,canny}, got '" + method + "'");
            }
            const EdgeMap e = edge_map(to_mask(mask), method == "canny" ? EdgeMethod::canny : EdgeMethod::sobel);
            return from_mask(BinaryMask(e.height, e.width, e.values));
        },
        py::arg("mask"), py::arg("method") = "sobel");

    m.def(
        "segmentation_metrics",
        [](const U8Array& pred, const U8Array& gt) { return metrics_dict(confusion_counts(to_mask(pred), to_mask(gt))); },
        py::arg("pred"), py::arg("gt"));

    m.def(
        "pad",
        [](const py::array_t<int, py::array::c_style | py::array::forcecast>& pred,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& gt, int height) {
            const PadResult r = pad(to_skyline(pred, height), to_skyline(gt, height));
            py::dict d;
            d["e"] = r.e;
            d["evaluated_columns"] = r.evaluated_columns;
            d["skipped_columns"] = r.skipped_columns;
            return d;
        },
        py::arg("pred"), py::arg("gt"), py::arg("height") = 0,
        "Mean absolute row error over columns defined in both skylines.");

    m.def(
        "aggregate_pad",
        [](const std::vector<double>& errors) {
            std::vector<PadResult> rs;
            for (double e : errors) rs.push_back({e, 1, 0});
            const PadAggregate a = aggregate_pad(rs);
            py::dict d;
            d["mu"] = a.mu;
            d["sigma"] = a.sigma;
            d["min"] = a.min;
            d["max"] = a.max;
            d["count"] = a.count;
            return d;
        },
        py::arg("errors"));

    m.def(
        "synth_sample",
        [](int index, std::uint64_t seed, int size) {
            SynthConfig cfg;
            cfg.seed = seed;
            cfg.height = cfg.width = size;
            cfg.count = index + 1;
            cfg.validate();
            const SyntheticSample s = generate_synthetic_sample(cfg, index);
            return py::make_tuple(from_image(s.image), from_mask(s.mask), rows_of(s.skyline));
        },
        py::arg("index"), py::arg("seed") = 0, py::arg("size") = 64, "Returns (image, mask, skyline).");

    m.def("read_mask", [](const std::filesystem::path& p) { return from_mask(read_mask(p)); }, py::arg("path"));
    m.def("read_image", [](const std::filesystem::path& p) { return from_image(read_rgb(p)); }, py::arg("path"));

    m.def(
        "main",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "yunet");
            std::vector<char*> argv;
            for (auto& a : args) argv.push_back(a.data());
            py::gil_scoped_release release;
            return run_cli(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "Runs the command-line tool and returns its exit code.");
}
