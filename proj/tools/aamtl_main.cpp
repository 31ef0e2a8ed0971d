// aamtl: train / transfer / fit / eval / sweep-d / synth pipeline driver.
//
// A JSON config file is the source of truth; a few CLI flags and the
// AAMTL_SEED / AAMTL_WORKERS environment variables override it. Every run
// echoes its effective config into the output directory so results can be
// reproduced from the echo alone.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "aam/dataset_io.hpp"
#include "aam/evaluation.hpp"
#include "aam/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
    std::uint64_t seed = 0;
    int workers = 1;
    fs::path output_dir = "out";
    fs::path config_path;
};

[[noreturn]] void fail(int code, const std::string& message) {
    std::cerr << "error: " << message << "\n";
    std::exit(code);
}

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw aam::ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key))
            throw aam::ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw aam::IoError("cannot write " + path.string());
    out << text;
    if (!out) throw aam::IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw aam::IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json vector_to_json(const aam::Vector& v) {
    json arr = json::array();
    for (aam::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

// ---------------------------------------------------------------------------
// Config sections
// ---------------------------------------------------------------------------

aam::FitConfig parse_fit_config(const json& obj, std::uint64_t default_seed) {
    require_keys(obj, "fit config",
                 {"max_iterations", "rel_cost_tolerance", "n_restarts", "noise_scale",
                  "noise_translation", "noise_rotation", "rng_seed"});
    aam::FitConfig cfg;
    cfg.max_iterations = get_or(obj, "max_iterations", cfg.max_iterations);
    cfg.rel_cost_tolerance = get_or(obj, "rel_cost_tolerance", cfg.rel_cost_tolerance);
    cfg.n_restarts = get_or(obj, "n_restarts", cfg.n_restarts);
    cfg.noise_scale = get_or(obj, "noise_scale", cfg.noise_scale);
    cfg.noise_translation = get_or(obj, "noise_translation", cfg.noise_translation);
    cfg.noise_rotation = get_or(obj, "noise_rotation", cfg.noise_rotation);
    cfg.rng_seed = get_or(obj, "rng_seed", default_seed);
    if (cfg.max_iterations < 1 || cfg.n_restarts < 0 || cfg.rel_cost_tolerance <= 0)
        throw aam::ConfigError("invalid fit config values");
    return cfg;
}

json fit_config_to_json(const aam::FitConfig& cfg) {
    return {{"max_iterations", cfg.max_iterations},
            {"rel_cost_tolerance", cfg.rel_cost_tolerance},
            {"n_restarts", cfg.n_restarts},
            {"noise_scale", cfg.noise_scale},
            {"noise_translation", cfg.noise_translation},
            {"noise_rotation", cfg.noise_rotation},
            {"rng_seed", cfg.rng_seed}};
}

struct DataSection {
    fs::path manifest;
    fs::path data_root;
    aam::Split split = aam::Split::Train;
    aam::LoadOptions load;
    std::string subject_pattern = "^([^_]+)_.*$";
};

DataSection parse_data_section(const json& obj, const std::string& where,
                               const std::string& manifest_key, aam::Split default_split) {
    DataSection d;
    d.manifest = obj.at(manifest_key).get<std::string>();
    d.data_root = fs::path(get_or<std::string>(obj, "data_root", d.manifest.parent_path().string()));
    const std::string split = get_or<std::string>(obj, "split", default_split == aam::Split::Train ? "train" : "test");
    if (split == "train") d.split = aam::Split::Train;
    else if (split == "test") d.split = aam::Split::Test;
    else throw aam::ConfigError(where + ": split must be 'train' or 'test'");
    d.load.trim_68_to_66 = get_or(obj, "trim_68_to_66", false);
    if (obj.contains("trim_indices")) {
        const auto idx = obj.at("trim_indices").get<std::vector<int>>();
        if (idx.size() != 2) throw aam::ConfigError(where + ": trim_indices needs 2 entries");
        d.load.trim_index_a = idx[0];
        d.load.trim_index_b = idx[1];
    }
    d.subject_pattern = get_or<std::string>(obj, "subject_pattern", d.subject_pattern);
    return d;
}

std::vector<aam::Example> load_split(const DataSection& d) {
    const aam::DatasetManifest manifest = aam::load_manifest(d.manifest, d.subject_pattern);
    std::vector<aam::Example> examples =
        aam::load_examples(manifest, d.split, d.data_root, d.load);
    if (examples.empty())
        throw aam::IoError("no examples in requested split of " + d.manifest.string());
    return examples;
}

aam::TrainOptions parse_train_options(const json& obj) {
    aam::TrainOptions opts;
    opts.shape_variance_fraction =
        get_or(obj, "shape_variance_fraction", opts.shape_variance_fraction);
    opts.appearance_variance_fraction =
        get_or(obj, "appearance_variance_fraction", opts.appearance_variance_fraction);
    opts.reference_face_size = get_or(obj, "reference_face_size", opts.reference_face_size);
    opts.label = aam::model_label_from_string(get_or<std::string>(obj, "label", "target"));
    return opts;
}

json train_options_to_json(const aam::TrainOptions& opts) {
    return {{"shape_variance_fraction", opts.shape_variance_fraction},
            {"appearance_variance_fraction", opts.appearance_variance_fraction},
            {"reference_face_size", opts.reference_face_size},
            {"label", aam::to_string(opts.label)}};
}

json data_section_to_json(const DataSection& d, const std::string& manifest_key) {
    return {{manifest_key, d.manifest.string()},
            {"data_root", d.data_root.string()},
            {"split", d.split == aam::Split::Train ? "train" : "test"},
            {"trim_68_to_66", d.load.trim_68_to_66},
            {"trim_indices", {d.load.trim_index_a, d.load.trim_index_b}},
            {"subject_pattern", d.subject_pattern}};
}

void write_run_outputs(const CommonOptions& common, const std::string& command,
                       const json& effective, json summary) {
    fs::create_directories(common.output_dir);
    json echo = effective;
    echo["command"] = command;
    echo["seed"] = common.seed;
    echo["workers"] = common.workers;
    echo["output_dir"] = common.output_dir.string();
    write_text(common.output_dir / "effective_config.json", echo.dump(2) + "\n");
    summary["generated_at"] = timestamp_now(); // the only timestamped field
    write_text(common.output_dir / "summary.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const json& section, const CommonOptions& common) {
    require_keys(section, "train",
                 {"manifest", "data_root", "split", "label", "shape_variance_fraction",
                  "appearance_variance_fraction", "reference_face_size", "trim_68_to_66",
                  "trim_indices", "subject_pattern", "model_out"});
    const DataSection data = parse_data_section(section, "train", "manifest", aam::Split::Train);
    const aam::TrainOptions opts = parse_train_options(section);
    const std::string model_out = get_or<std::string>(section, "model_out", "model.aam");

    const std::vector<aam::Example> examples = load_split(data);
    if (examples.size() < 2)
        throw aam::DegenerateInputError("train: need at least 2 training examples");
    const aam::TrainedAam trained = aam::train_aam(examples, opts);

    fs::create_directories(common.output_dir);
    aam::save_model(trained.model, common.output_dir / model_out);

    // Retained fractions against the total sample variance.
    const aam::Matrix shape_centered =
        trained.aligned.shapes.colwise() - trained.model.shape.mean.points;
    const double shape_total =
        shape_centered.squaredNorm() / std::max<double>(1.0, double(trained.aligned.num_samples() - 1));
    const aam::Matrix app_centered =
        trained.appearances.colwise() - trained.model.appearance.mean;
    const double app_total =
        app_centered.squaredNorm() / std::max<double>(1.0, double(trained.appearances.cols() - 1));

    json summary = {
        {"model_file", model_out},
        {"n_examples", examples.size()},
        {"V", trained.model.num_points()},
        {"K", trained.model.shape.num_local()},
        {"M", trained.model.appearance.basis.size()},
        {"L", trained.model.appearance.frame.L},
        {"shape_retained_variance",
         shape_total > 0 ? trained.model.shape.eigenvalues.sum() / shape_total : 1.0},
        {"appearance_retained_variance",
         app_total > 0 ? trained.model.appearance.eigenvalues.sum() / app_total : 1.0},
    };
    json effective = data_section_to_json(data, "manifest");
    effective.update(train_options_to_json(opts));
    effective["model_out"] = model_out;
    write_run_outputs(common, "train", {{"train", effective}}, summary);
    std::cout << "trained model: V=" << trained.model.num_points()
              << " K=" << trained.model.shape.num_local()
              << " M=" << trained.model.appearance.basis.size()
              << " L=" << trained.model.appearance.frame.L << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// transfer
// ---------------------------------------------------------------------------

json projected_variance_report(const aam::ProjectedVariance& pv,
                               const std::vector<aam::Index>& selected) {
    json order = json::array();
    json sigma_sorted = json::array();
    for (aam::Index idx : pv.order) {
        order.push_back(idx);
        sigma_sorted.push_back(pv.sigma2(idx));
    }
    return {{"sigma2_by_source_index", vector_to_json(pv.sigma2)},
            {"order_descending", order},
            {"sigma2_descending", sigma_sorted},
            {"selected_indices", selected}};
}

int cmd_transfer(const json& section, const CommonOptions& common) {
    require_keys(section, "transfer",
                 {"source_model", "target_manifest", "data_root", "split", "d_shape",
                  "d_appearance", "ordering", "renormalize_warped", "shape_variance_fraction",
                  "appearance_variance_fraction", "reference_face_size", "trim_68_to_66",
                  "trim_indices", "subject_pattern", "model_out"});
    const fs::path source_path = section.at("source_model").get<std::string>();
    const DataSection data =
        parse_data_section(section, "transfer", "target_manifest", aam::Split::Train);
    aam::TrainOptions opts = parse_train_options(section);
    opts.label = aam::ModelLabel::Target;

    aam::TransferConfig cfg;
    cfg.d_shape = get_or<aam::Index>(section, "d_shape", cfg.d_shape);
    cfg.d_appearance = get_or<aam::Index>(section, "d_appearance", cfg.d_appearance);
    cfg.ordering =
        aam::ordering_from_string(get_or<std::string>(section, "ordering", "target_variance"));
    cfg.renormalize_warped = get_or(section, "renormalize_warped", true);
    const std::string model_out = get_or<std::string>(section, "model_out", "selected.aam");

    const aam::AamModel source = aam::load_model(source_path);
    const std::vector<aam::Example> target_examples = load_split(data);
    const aam::TrainedAam target = aam::train_aam(target_examples, opts);

    aam::TransferReport report;
    const aam::AamModel selected = aam::transfer_model(target, source, cfg, &report);

    fs::create_directories(common.output_dir);
    aam::save_model(selected, common.output_dir / model_out);

    json summary = {
        {"model_file", model_out},
        {"d_shape", cfg.d_shape},
        {"d_appearance", cfg.d_appearance},
        {"ordering", aam::to_string(cfg.ordering)},
        {"shape", projected_variance_report(report.shape_sigma2, report.shape_selected)},
        {"appearance",
         projected_variance_report(report.appearance_sigma2, report.appearance_selected)},
        {"target_K", target.model.shape.num_local()},
        {"target_M", target.model.appearance.basis.size()},
        {"selected_K", selected.shape.num_local()},
        {"selected_M", selected.appearance.basis.size()},
    };
    json effective = data_section_to_json(data, "target_manifest");
    effective.update(train_options_to_json(opts));
    effective.erase("label");
    effective["source_model"] = source_path.string();
    effective["d_shape"] = cfg.d_shape;
    effective["d_appearance"] = cfg.d_appearance;
    effective["ordering"] = aam::to_string(cfg.ordering);
    effective["renormalize_warped"] = cfg.renormalize_warped;
    effective["model_out"] = model_out;
    write_run_outputs(common, "transfer", {{"transfer", effective}}, summary);
    std::cout << "transferred model: K=" << selected.shape.num_local()
              << " M=" << selected.appearance.basis.size() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

int cmd_fit(const json& section, const CommonOptions& common) {
    require_keys(section, "fit", {"model", "image", "landmarks", "bbox", "fit", "fitted_out"});
    const aam::AamModel model = aam::load_model(section.at("model").get<std::string>());
    const aam::Image image = aam::read_pgm(section.at("image").get<std::string>());
    const aam::FitConfig fit_cfg =
        parse_fit_config(section.value("fit", json::object()), common.seed);

    std::optional<aam::Shape> truth;
    if (section.contains("landmarks")) {
        truth = aam::parse_pts(read_text(section.at("landmarks").get<std::string>())).to_shape();
    }
    aam::Rect bbox;
    if (section.contains("bbox")) {
        const auto b = section.at("bbox").get<std::vector<double>>();
        if (b.size() != 4) throw aam::ConfigError("fit: bbox needs [x, y, width, height]");
        bbox = {b[0], b[1], b[2], b[3]};
    } else if (truth) {
        bbox = aam::bounding_rect(*truth);
    } else {
        throw aam::ConfigError("fit: need either bbox or landmarks for initialization");
    }

    const aam::Fitter fitter(model);
    const aam::FitResult result = fitter.fit_with_restarts(image, bbox, fit_cfg);

    const std::string fitted_out = get_or<std::string>(section, "fitted_out", "fitted.pts");
    fs::create_directories(common.output_dir);
    write_text(common.output_dir / fitted_out,
               aam::write_pts(aam::LandmarkFile::from_shape(result.shape)));

    json summary = {
        {"fitted_file", fitted_out},
        {"converged", result.converged},
        {"diverged", result.diverged},
        {"iterations", result.iterations()},
        {"restart_index", result.restart_index},
        {"final_cost", result.final_cost()},
        {"cost_trace", result.cost_trace},
    };
    if (truth) summary["normalized_rms"] = aam::normalized_rms(result.shape, *truth);

    json effective = {{"model", section.at("model").get<std::string>()},
                      {"image", section.at("image").get<std::string>()},
                      {"fit", fit_config_to_json(fit_cfg)},
                      {"fitted_out", fitted_out}};
    if (truth) effective["landmarks"] = section.at("landmarks").get<std::string>();
    if (section.contains("bbox")) effective["bbox"] = section.at("bbox");
    write_run_outputs(common, "fit", {{"fit", effective}}, summary);
    std::cout << "fit " << (result.converged ? "converged" : "stopped") << " after "
              << result.iterations() << " iterations, final cost " << result.final_cost()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

std::string curve_csv(const std::vector<aam::CurvePoint>& curve) {
    std::string out = "tolerance,fraction\n";
    for (const auto& p : curve)
        out += format_double(p.tolerance) + "," + format_double(p.fraction) + "\n";
    return out;
}

std::string examples_csv(const aam::EvalReport& report) {
    std::string out = "id,rms,cost_iters\n";
    for (const auto& e : report.per_example) {
        out += e.id + "," + (e.failed ? "inf" : format_double(e.normalized_rms)) + "," +
               std::to_string(e.converged_iterations) + "\n";
    }
    return out;
}

std::string sanitize_name(const std::string& name) {
    std::string out;
    for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return out;
}

int cmd_eval(const json& section, const CommonOptions& common) {
    require_keys(section, "eval",
                 {"models", "model_names", "test_manifest", "data_root", "split",
                  "trim_68_to_66", "trim_indices", "subject_pattern", "fit", "tolerances"});
    const auto model_paths = section.at("models").get<std::vector<std::string>>();
    if (model_paths.empty()) throw aam::ConfigError("eval: no models given");
    std::vector<std::string> names =
        get_or(section, "model_names", std::vector<std::string>{});
    if (names.empty()) {
        for (const auto& p : model_paths) names.push_back(fs::path(p).stem().string());
    }
    if (names.size() != model_paths.size())
        throw aam::ConfigError("eval: model_names must match models");

    const DataSection data =
        parse_data_section(section, "eval", "test_manifest", aam::Split::Test);
    const aam::FitConfig fit_cfg =
        parse_fit_config(section.value("fit", json::object()), common.seed);

    aam::EvalOptions eval_opts;
    eval_opts.workers = common.workers;
    if (section.contains("tolerances")) {
        const json& t = section.at("tolerances");
        require_keys(t, "eval.tolerances", {"min", "max", "count"});
        const double lo = t.at("min").get<double>();
        const double hi = t.at("max").get<double>();
        const int count = t.at("count").get<int>();
        if (!(lo > 0) || hi <= lo || count < 2)
            throw aam::ConfigError("eval: invalid tolerance grid");
        eval_opts.tolerances.resize(count);
        for (int i = 0; i < count; ++i)
            eval_opts.tolerances[i] = lo * std::pow(hi / lo, double(i) / (count - 1));
    }

    std::vector<aam::AamModel> models;
    models.reserve(model_paths.size());
    for (const auto& p : model_paths) models.push_back(aam::load_model(p));
    std::vector<const aam::AamModel*> model_ptrs;
    for (const auto& m : models) model_ptrs.push_back(&m);

    const std::vector<aam::Example> test_set = load_split(data);
    const std::vector<aam::EvalReport> reports =
        aam::run_comparison(model_ptrs, names, test_set, fit_cfg, eval_opts);

    fs::create_directories(common.output_dir);
    json per_model = json::object();
    int completed = 0;
    for (const auto& report : reports) {
        const std::string base = sanitize_name(report.model_name);
        write_text(common.output_dir / ("curve_" + base + ".csv"), curve_csv(report.curve));
        write_text(common.output_dir / ("examples_" + base + ".csv"), examples_csv(report));
        int failures = 0;
        for (const auto& e : report.per_example) failures += e.failed ? 1 : 0;
        completed += static_cast<int>(report.per_example.size()) - failures;
        per_model[report.model_name] = {
            {"curve_file", "curve_" + base + ".csv"},
            {"examples_file", "examples_" + base + ".csv"},
            {"fraction_at_0.05", report.fraction_at(aam::kConvergenceRmsThreshold)},
            {"mean_rms_over_converged", report.mean_rms_over_converged},
            {"mean_cost_trace", report.mean_cost_trace},
            {"failures", failures},
        };
    }
    json summary = {{"models", per_model}, {"n_examples", test_set.size()}};

    json effective = data_section_to_json(data, "test_manifest");
    effective["models"] = model_paths;
    effective["model_names"] = names;
    effective["fit"] = fit_config_to_json(fit_cfg);
    write_run_outputs(common, "eval", {{"eval", effective}}, summary);
    for (const auto& report : reports)
        std::cout << report.model_name << ": fraction@0.05 = "
                  << report.fraction_at(aam::kConvergenceRmsThreshold) << "\n";
    return completed > 0 ? 0 : kExitNumeric;
}

// ---------------------------------------------------------------------------
// sweep-d
// ---------------------------------------------------------------------------

int cmd_sweep_d(const json& section, const CommonOptions& common) {
    require_keys(section, "sweep_d",
                 {"source_model", "target_manifest", "test_manifest", "data_root", "split",
                  "d_values", "fit", "shape_variance_fraction", "appearance_variance_fraction",
                  "reference_face_size", "trim_68_to_66", "trim_indices", "subject_pattern"});
    const fs::path source_path = section.at("source_model").get<std::string>();
    DataSection target_data =
        parse_data_section(section, "sweep_d", "target_manifest", aam::Split::Train);
    DataSection test_data =
        parse_data_section(section, "sweep_d", "test_manifest", aam::Split::Test);
    test_data.split = aam::Split::Test;
    aam::TrainOptions opts = parse_train_options(section);
    const auto d_values = section.at("d_values").get<std::vector<aam::Index>>();
    if (d_values.empty()) throw aam::ConfigError("sweep_d: empty d_values");
    const aam::FitConfig fit_cfg =
        parse_fit_config(section.value("fit", json::object()), common.seed);

    const aam::AamModel source = aam::load_model(source_path);
    const aam::TrainedAam target = aam::train_aam(load_split(target_data), opts);
    const std::vector<aam::Example> test_set = load_split(test_data);

    aam::EvalOptions eval_opts;
    eval_opts.workers = common.workers;
    const std::vector<aam::SweepRow> rows =
        aam::ordering_sweep(target, source, test_set, d_values, fit_cfg, eval_opts);

    std::string csv = "d,ordering,fraction_at_0.05\n";
    for (const auto& row : rows)
        csv += std::to_string(row.d) + "," + aam::to_string(row.ordering) + "," +
               format_double(row.fraction_converged) + "\n";
    fs::create_directories(common.output_dir);
    write_text(common.output_dir / "sweep.csv", csv);

    json summary = {{"sweep_file", "sweep.csv"}, {"n_rows", rows.size()}};
    json effective = data_section_to_json(target_data, "target_manifest");
    effective["test_manifest"] = test_data.manifest.string();
    effective["source_model"] = source_path.string();
    effective["d_values"] = d_values;
    effective["fit"] = fit_config_to_json(fit_cfg);
    effective.update(train_options_to_json(opts));
    effective.erase("label");
    write_run_outputs(common, "sweep-d", {{"sweep_d", effective}}, summary);
    std::cout << "sweep rows: " << rows.size() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

void write_dataset(const aam::SynthDataset& data, const fs::path& dir,
                   aam::Split split) {
    fs::create_directories(dir);
    aam::DatasetManifest manifest;
    for (size_t i = 0; i < data.examples.size(); ++i) {
        const aam::Example& ex = data.examples[i];
        const std::string stem = "sample_" + std::to_string(i);
        aam::write_pgm(ex.image, dir / (stem + ".pgm"), 16);
        write_text(dir / (stem + ".pts"),
                   aam::write_pts(aam::LandmarkFile::from_shape(ex.shape)));
        aam::ManifestEntry entry;
        entry.image_path = stem + ".pgm";
        entry.landmark_path = stem + ".pts";
        entry.subject_id = ex.id;
        entry.split = split;
        manifest.entries.push_back(std::move(entry));
    }
    write_text(dir / "manifest.tsv", aam::write_manifest(manifest));
}

int cmd_synth(const json& section, const CommonOptions& common) {
    require_keys(section, "synth",
                 {"scenario", "n_samples", "n_shape_factors", "shape_factor_stddev",
                  "landmark_noise", "noise_stddev", "pose_jitter_scale",
                  "pose_jitter_rotation", "pose_jitter_translation"});
    const std::string scenario = get_or<std::string>(section, "scenario", "planted");
    fs::create_directories(common.output_dir);

    json summary;
    if (scenario == "planted") {
        const aam::PlantedScenario sc = aam::planted_transfer_scenario(common.seed);
        write_dataset(sc.source, common.output_dir / "source", aam::Split::Train);
        write_dataset(sc.target_train, common.output_dir / "target", aam::Split::Train);
        write_dataset(sc.test, common.output_dir / "test", aam::Split::Test);
        json truth = {
            {"planted_factor", vector_to_json(sc.planted_factor)},
            {"confounder1", vector_to_json(sc.confounder1)},
            {"confounder2", vector_to_json(sc.confounder2)},
            {"mean_offset", vector_to_json(sc.mean_offset)},
            {"base_shape", vector_to_json(sc.base_shape.points)},
            {"source_base_shape", vector_to_json(sc.source_base_shape.points)},
        };
        write_text(common.output_dir / "truth.json", truth.dump(2) + "\n");
        summary = {{"scenario", "planted"},
                   {"source_samples", sc.source.examples.size()},
                   {"target_samples", sc.target_train.examples.size()},
                   {"test_samples", sc.test.examples.size()}};
    } else if (scenario == "basic") {
        aam::SynthSpec spec;
        spec.base_shape = aam::stylized_face_shape();
        spec.rng_seed = common.seed;
        spec.n_samples = get_or(section, "n_samples", 20);
        const int n_factors = get_or(section, "n_shape_factors", 2);
        const double factor_stddev = get_or(section, "shape_factor_stddev", 10.0);
        spec.landmark_noise = get_or(section, "landmark_noise", 0.0);
        spec.noise_stddev = get_or(section, "noise_stddev", 0.0);
        spec.pose_jitter.scale = get_or(section, "pose_jitter_scale", 0.03);
        spec.pose_jitter.rotation = get_or(section, "pose_jitter_rotation", 0.05);
        spec.pose_jitter.translation = get_or(section, "pose_jitter_translation", 2.0);
        aam::Rng rng(common.seed);
        aam::Matrix existing(spec.base_shape.points.size(), 0);
        for (int i = 0; i < n_factors; ++i) {
            aam::Vector dir =
                aam::random_deformation_direction(spec.base_shape, existing, rng);
            existing.conservativeResize(Eigen::NoChange, existing.cols() + 1);
            existing.col(existing.cols() - 1) = dir;
            spec.shape_factors.push_back({dir, factor_stddev});
        }
        const aam::SynthDataset data = aam::generate(spec);
        write_dataset(data, common.output_dir / "data", aam::Split::Train);
        summary = {{"scenario", "basic"}, {"samples", data.examples.size()}};
    } else {
        throw aam::ConfigError("synth: scenario must be 'planted' or 'basic'");
    }

    json effective = section.is_null() ? json::object() : section;
    effective["scenario"] = scenario;
    write_run_outputs(common, "synth", {{"synth", effective}}, summary);
    std::cout << "synth dataset written to " << common.output_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AAM training, subspace-selection transfer, fitting and evaluation"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string config_path;
    std::string output_dir_flag;
    std::int64_t seed_flag = -1;
    int workers_flag = -1;

    app.add_option("--config,-c", config_path, "JSON config file")->required(false);
    app.add_option("--output-dir,-o", output_dir_flag, "output directory (overrides config)");
    app.add_option("--seed", seed_flag, "rng seed (overrides config and AAMTL_SEED)");
    app.add_option("--workers", workers_flag, "worker threads (overrides config)");

    CLI::App* sub_train = app.add_subcommand("train", "train an AAM from a manifest");
    CLI::App* sub_transfer =
        app.add_subcommand("transfer", "augment a target model with selected source components");
    CLI::App* sub_fit = app.add_subcommand("fit", "fit a model to one image");
    CLI::App* sub_eval = app.add_subcommand("eval", "compare models on a test manifest");
    CLI::App* sub_sweep = app.add_subcommand("sweep-d", "fraction converged as a function of D");
    CLI::App* sub_synth = app.add_subcommand("synth", "generate synthetic datasets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitUsage : 0;
    }

    try {
        json config = json::object();
        if (!config_path.empty()) {
            try {
                config = json::parse(read_text(config_path));
            } catch (const json::parse_error& e) {
                throw aam::ConfigError("config parse error: " + std::string(e.what()));
            }
        }
        require_keys(config, "config",
                     {"seed", "workers", "output_dir", "command", "train", "transfer", "fit",
                      "eval", "sweep_d", "synth"});

        common.seed = get_or<std::uint64_t>(config, "seed", 0);
        common.workers = get_or(config, "workers", 1);
        common.output_dir = fs::path(get_or<std::string>(config, "output_dir", "out"));
        if (const char* env = std::getenv("AAMTL_SEED"))
            common.seed = std::strtoull(env, nullptr, 10);
        if (const char* env = std::getenv("AAMTL_WORKERS"))
            common.workers = static_cast<int>(std::strtol(env, nullptr, 10));
        if (seed_flag >= 0) common.seed = static_cast<std::uint64_t>(seed_flag);
        if (workers_flag >= 0) common.workers = workers_flag;
        if (!output_dir_flag.empty()) common.output_dir = output_dir_flag;
        if (common.workers < 1) common.workers = 1;

        if (sub_train->parsed()) return cmd_train(config.value("train", json::object()), common);
        if (sub_transfer->parsed())
            return cmd_transfer(config.value("transfer", json::object()), common);
        if (sub_fit->parsed()) return cmd_fit(config.value("fit", json::object()), common);
        if (sub_eval->parsed()) return cmd_eval(config.value("eval", json::object()), common);
        if (sub_sweep->parsed())
            return cmd_sweep_d(config.value("sweep_d", json::object()), common);
        if (sub_synth->parsed()) return cmd_synth(config.value("synth", json::object()), common);
        fail(kExitUsage, "no subcommand given");
    } catch (const aam::ConfigError& e) {
        fail(kExitUsage, e.what());
    } catch (const aam::ParseError& e) {
        fail(kExitData, e.what());
    } catch (const aam::SerializationError& e) {
        fail(kExitData, e.what());
    } catch (const aam::IoError& e) {
        fail(kExitData, e.what());
    } catch (const aam::Error& e) {
        fail(kExitNumeric, e.what());
    } catch (const json::exception& e) {
        fail(kExitUsage, std::string("config error: ") + e.what());
    } catch (const std::exception& e) {
        fail(kExitNumeric, e.what());
    }
    return 0;
}
