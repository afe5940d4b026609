// poc: command-line workflows for POC-surface estimation.
// Subcommands: simulate, fit, predict, diagnose, study.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poc/data.hpp"
#include "poc/diagnostics.hpp"
#include "poc/io.hpp"
#include "poc/network.hpp"
#include "poc/ordinal.hpp"
#include "poc/simulation.hpp"
#include "poc/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int default_threads() {
    if (const char* env = std::getenv("POC_THREADS")) {
        const int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Every output directory gets exactly one manifest describing the run.
void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& config,
                    const std::vector<fs::path>& input_files,
                    const std::vector<std::string>& output_files) {
    json doc;
    doc["tool"] = "poc";
    doc["version"] = kToolVersion;
    doc["command"] = command;
    doc["config"] = config;
    json inputs = json::array();
    for (const auto& p : input_files) {
        inputs.push_back(
            {{"path", p.string()}, {"digest", poc::digest_hex(poc::read_file(p))}});
    }
    doc["inputs"] = std::move(inputs);
    doc["outputs"] = output_files;
    doc["timestamp"] = timestamp_now();
    poc::write_file_atomic(out_dir / "manifest.json", doc.dump(2) + "\n");
}

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw std::runtime_error("cannot create output directory " + dir.string());
}

// ---------------------------------------------------------------- mapping

struct ColumnMapping {
    std::vector<std::string> features;
    std::vector<std::string> triggers;
    std::vector<std::string> followup_columns;  // one, or J for categorical
    poc::FollowupKind kind = poc::FollowupKind::Binary;
    int categories = 1;
};

ColumnMapping load_mapping(const fs::path& path) {
    const auto doc = json::parse(poc::read_file(path));
    ColumnMapping map;
    map.features = doc.at("features").get<std::vector<std::string>>();
    if (doc.at("trigger").is_array())
        map.triggers = doc.at("trigger").get<std::vector<std::string>>();
    else
        map.triggers = {doc.at("trigger").get<std::string>()};
    const auto& fu = doc.at("followup");
    const std::string kind = fu.at("kind").get<std::string>();
    if (kind == "binary") {
        map.kind = poc::FollowupKind::Binary;
        map.followup_columns = {fu.at("column").get<std::string>()};
    } else if (kind == "ordinal") {
        map.kind = poc::FollowupKind::Ordinal;
        map.followup_columns = {fu.at("column").get<std::string>()};
        map.categories = fu.at("categories").get<int>();
    } else if (kind == "categorical") {
        map.kind = poc::FollowupKind::Categorical;
        map.followup_columns = fu.at("columns").get<std::vector<std::string>>();
        map.categories = static_cast<int>(map.followup_columns.size());
    } else if (kind == "continuous") {
        map.kind = poc::FollowupKind::Continuous;
        map.followup_columns = {fu.at("column").get<std::string>()};
    } else {
        throw UsageError("unknown follow-up kind: " + kind);
    }
    if (map.features.empty()) throw UsageError("mapping lists no feature columns");
    return map;
}

poc::RawDataset load_raw(const fs::path& csv_path, const ColumnMapping& map) {
    const poc::CsvTable table = poc::read_csv(csv_path);
    auto col = [&](const std::string& name) {
        const int c = table.column(name);
        if (c < 0) throw UsageError("column '" + name + "' not found in CSV");
        return static_cast<std::size_t>(c);
    };
    const std::size_t n = table.values.rows;
    poc::RawDataset raw;
    raw.kind = map.kind;
    raw.categories = map.categories;
    raw.features = poc::Matrix(n, map.features.size());
    for (std::size_t j = 0; j < map.features.size(); ++j) {
        const auto c = col(map.features[j]);
        for (std::size_t i = 0; i < n; ++i)
            raw.features(i, j) = table.values(i, c);
    }
    raw.triggers = poc::Matrix(n, map.triggers.size());
    for (std::size_t j = 0; j < map.triggers.size(); ++j) {
        const auto c = col(map.triggers[j]);
        for (std::size_t i = 0; i < n; ++i)
            raw.triggers(i, j) = table.values(i, c);
    }
    raw.followup = poc::Matrix(n, map.followup_columns.size());
    for (std::size_t j = 0; j < map.followup_columns.size(); ++j) {
        const auto c = col(map.followup_columns[j]);
        for (std::size_t i = 0; i < n; ++i)
            raw.followup(i, j) = table.values(i, c);
    }
    return raw;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& scenario_name, std::size_t n,
                 std::uint64_t seed, double q, const fs::path& out_dir) {
    poc::ScenarioId id;
    try {
        id = poc::scenario_from_name(scenario_name);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    ensure_out_dir(out_dir);
    const poc::ScenarioDraw draw = poc::generate(id, n, seed, q);
    const int d = poc::scenario_dim(id);
    const int j_cats = poc::scenario_categories(id);

    std::vector<std::string> header;
    for (int j = 0; j < d; ++j) header.push_back("x" + std::to_string(j + 1));
    header.push_back("y");
    if (j_cats == 1) {
        header.push_back("delta");
    } else {
        for (int j = 0; j < j_cats; ++j)
            header.push_back("d" + std::to_string(j + 1));
    }
    poc::Matrix rows(n, header.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = 0;
        for (int j = 0; j < d; ++j)
            rows(i, c++) = draw.raw.features(i, static_cast<std::size_t>(j));
        rows(i, c++) = draw.raw.triggers(i, 0);
        for (std::size_t j = 0; j < draw.raw.followup.cols; ++j)
            rows(i, c++) = draw.raw.followup(i, j);
    }
    poc::write_file_atomic(out_dir / "dataset.csv", poc::to_csv(header, rows));

    const poc::Matrix grid = poc::evaluation_grid(d);
    std::vector<std::string> theader;
    for (int j = 0; j < d; ++j) theader.push_back("x" + std::to_string(j + 1));
    if (j_cats == 1) {
        theader.push_back("alpha");
    } else {
        for (int j = 0; j < j_cats; ++j)
            theader.push_back("alpha" + std::to_string(j + 1));
    }
    poc::Matrix trows(grid.rows, theader.size());
    for (std::size_t i = 0; i < grid.rows; ++i) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < grid.cols; ++j) trows(i, c++) = grid(i, j);
        const auto a = poc::true_poc(
            id, std::span<const double>(grid.row(i), grid.cols));
        for (double v : a) trows(i, c++) = v;
    }
    poc::write_file_atomic(out_dir / "truth.csv", poc::to_csv(theader, trows));

    // Sidecar mapping so the dataset feeds straight into `poc fit`.
    json mapping;
    mapping["features"] = json::array();
    for (int j = 0; j < d; ++j)
        mapping["features"].push_back("x" + std::to_string(j + 1));
    mapping["trigger"] = "y";
    if (j_cats == 1) {
        mapping["followup"] = {{"kind", "binary"}, {"column", "delta"}};
    } else {
        json cols = json::array();
        for (int j = 0; j < j_cats; ++j)
            cols.push_back("d" + std::to_string(j + 1));
        mapping["followup"] = {{"kind", "categorical"}, {"columns", cols}};
    }
    poc::write_file_atomic(out_dir / "mapping.json", mapping.dump(2) + "\n");

    json config{{"scenario", scenario_name}, {"n", n}, {"seed", seed}, {"q", q}};
    write_manifest(out_dir, "simulate", config, {},
                   {"dataset.csv", "truth.csv", "mapping.json"});
    return 0;
}

// -------------------------------------------------------------------- fit

json scaling_to_json(const poc::ScalingParams& s) {
    json doc;
    doc["min"] = s.min;
    doc["max"] = s.max;
    json cs = json::array();
    for (bool c : s.constant) cs.push_back(c);
    doc["constant"] = cs;
    return doc;
}

poc::StepMode parse_step_mode(const std::string& name) {
    if (name == "fixed") return poc::StepMode::FixedStep;
    if (name == "wolfe") return poc::StepMode::StrongWolfe;
    throw UsageError("invalid step mode '" + name + "' (expected fixed or wolfe)");
}

int cmd_fit(const fs::path& data_path, const fs::path& mapping_path, double q,
            int degree, int intervals, int layer_count,
            const std::string& widths_arg, const std::string& g_name,
            std::uint64_t seed, int max_iter, const std::string& step_mode,
            double lr, const fs::path& out_dir) {
    const ColumnMapping map = load_mapping(mapping_path);
    const poc::RawDataset raw = load_raw(data_path, map);
    const poc::ThresholdedSample sample = poc::build_threshold_sample(raw, q);
    const int d = static_cast<int>(sample.features.cols);

    if (g_name != "sigmoid" && g_name != "softmax")
        throw UsageError("invalid g-layer '" + g_name +
                         "' (expected sigmoid or softmax)");
    if (layer_count < 3) throw UsageError("need at least 3 layers");

    const poc::SplineSpec spec(degree, intervals);
    poc::FitConfig config;
    config.max_iterations = max_iter;
    config.init_seed = seed;
    config.step_mode = parse_step_mode(step_mode);
    config.learning_rate = lr;

    ensure_out_dir(out_dir);
    std::vector<std::string> outputs;

    const int out_width =
        map.kind == poc::FollowupKind::Categorical ? map.categories : 1;
    std::vector<int> widths;
    if (widths_arg.empty()) {
        widths = poc::KaneNetwork::canonical_widths(d, out_width,
                                                    layer_count - 2);
    } else {
        std::stringstream ss(widths_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) widths.push_back(std::stoi(tok));
        if (widths.empty() || widths.front() != d || widths.back() != out_width)
            throw UsageError("--widths must start at the feature dimension and "
                             "end at the output width");
    }

    json report;
    if (map.kind == poc::FollowupKind::Ordinal) {
        poc::OrdinalModel model = poc::fit_ordinal(sample, widths, spec, config);
        poc::write_file_atomic(out_dir / "model.json",
                               model.to_document() + "\n");
        json subs = json::array();
        for (const auto& sub : model.sub_models) {
            if (sub.degenerate) {
                subs.push_back(
                    {{"degenerate", true}, {"rate", sub.constant_rate}});
            } else {
                subs.push_back(json::parse(sub.estimate->report.to_document()));
            }
        }
        report["sub_model_reports"] = std::move(subs);
    } else {
        const bool multi = map.kind == poc::FollowupKind::Categorical;
        if (multi && g_name != "softmax")
            throw UsageError("categorical follow-up requires --g softmax");
        config.loss = multi ? poc::LossKind::MultiCE : poc::LossKind::BinaryCE;
        const poc::GLayer g =
            multi ? poc::GLayer::softmax(map.categories) : poc::GLayer::sigmoid();
        const poc::PocEstimate estimate =
            poc::fit(sample, widths, spec, g, config);
        poc::write_file_atomic(out_dir / "model.json",
                               estimate.net.to_document() + "\n");
        report = json::parse(estimate.report.to_document());
    }
    report["threshold"] = sample.threshold;
    report["retained"] = sample.retained;
    report["scaling"] = scaling_to_json(sample.scaling);
    poc::write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
    outputs = {"model.json", "report.json"};

    json config_doc{{"data", data_path.string()},
                    {"mapping", mapping_path.string()},
                    {"q", q},
                    {"p", degree},
                    {"m", intervals},
                    {"layers", layer_count},
                    {"g", g_name},
                    {"seed", seed},
                    {"max_iterations", max_iter},
                    {"step_mode", step_mode},
                    {"learning_rate", lr}};
    write_manifest(out_dir, "fit", config_doc, {data_path, mapping_path},
                   outputs);
    return 0;
}

// ---------------------------------------------------------------- predict

int cmd_predict(const fs::path& model_path, int grid_points,
                const std::string& points_csv, const fs::path& out_file) {
    const std::string doc_text = poc::read_file(model_path);
    const auto doc = json::parse(doc_text);
    const std::string format = doc.value("format", "");

    std::optional<poc::KaneNetwork> net;
    std::optional<poc::OrdinalModel> ordinal;
    int d = 0, j_cats = 1;
    if (format == "kane-network") {
        net = poc::KaneNetwork::from_document(doc_text);
        d = net->input_dim();
        j_cats = net->output_dim();
    } else if (format == "frank-hall-ordinal") {
        ordinal = poc::OrdinalModel::from_document(doc_text);
        d = ordinal->feature_dim;
        j_cats = ordinal->categories;
    } else {
        throw UsageError("unrecognized model document: " + model_path.string());
    }

    poc::Matrix points;
    if (!points_csv.empty()) {
        const poc::CsvTable table = poc::read_csv(points_csv);
        if (static_cast<int>(table.values.cols) != d)
            throw std::runtime_error("points CSV has " +
                                     std::to_string(table.values.cols) +
                                     " columns but the model expects " +
                                     std::to_string(d));
        points = table.values;
    } else if (grid_points > 1) {
        if (d == 1) {
            points = poc::Matrix(static_cast<std::size_t>(grid_points), 1);
            for (int i = 0; i < grid_points; ++i)
                points(static_cast<std::size_t>(i), 0) =
                    static_cast<double>(i) / (grid_points - 1);
        } else if (d == 2) {
            points = poc::Matrix(
                static_cast<std::size_t>(grid_points) * grid_points, 2);
            std::size_t r = 0;
            for (int i = 0; i < grid_points; ++i) {
                for (int j = 0; j < grid_points; ++j, ++r) {
                    points(r, 0) = static_cast<double>(i) / (grid_points - 1);
                    points(r, 1) = static_cast<double>(j) / (grid_points - 1);
                }
            }
        } else {
            throw UsageError("--grid-points supports 1- and 2-feature models; "
                             "use --points for higher dimensions");
        }
    } else {
        points = poc::evaluation_grid(d);
    }

    std::vector<std::string> header;
    for (int j = 0; j < d; ++j) header.push_back("x" + std::to_string(j + 1));
    if (j_cats == 1) {
        header.push_back("alpha");
    } else {
        for (int j = 0; j < j_cats; ++j)
            header.push_back("alpha" + std::to_string(j + 1));
    }
    poc::Matrix rows(points.rows, header.size());
    for (std::size_t i = 0; i < points.rows; ++i) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < points.cols; ++j) rows(i, c++) = points(i, j);
        const std::span<const double> x(points.row(i), points.cols);
        const std::vector<double> a =
            net ? net->forward(x) : poc::ordinal_category_probs(*ordinal, x);
        for (double v : a) rows(i, c++) = v;
    }
    poc::write_file_atomic(out_file, poc::to_csv(header, rows));
    return 0;
}

// --------------------------------------------------------------- diagnose

int cmd_diagnose(const fs::path& model_path, const fs::path& data_path,
                 const fs::path& mapping_path, double q, int trajectories,
                 std::uint64_t seed, const fs::path& out_dir) {
    const poc::KaneNetwork net =
        poc::KaneNetwork::from_document(poc::read_file(model_path));
    const ColumnMapping map = load_mapping(mapping_path);
    const poc::RawDataset raw = load_raw(data_path, map);
    const poc::ThresholdedSample sample = poc::build_threshold_sample(raw, q);
    if (sample.outcomes.cols != 1)
        throw std::runtime_error("diagnostics require a binary follow-up");
    if (static_cast<int>(sample.features.cols) != net.input_dim())
        throw std::runtime_error("model/data feature dimension mismatch");

    poc::PocEstimate estimate{net, net.input_dim(), sample.threshold, 0, {}};
    const poc::ResidualSet residuals =
        poc::dunn_smyth(estimate, sample, trajectories, seed);

    ensure_out_dir(out_dir);
    {
        poc::Matrix rows(residuals.trajectories.size() * sample.retained, 3);
        std::size_t r = 0;
        for (std::size_t t = 0; t < residuals.trajectories.size(); ++t) {
            for (std::size_t i = 0; i < residuals.trajectories[t].size(); ++i, ++r) {
                rows(r, 0) = static_cast<double>(t);
                rows(r, 1) = static_cast<double>(i);
                rows(r, 2) = residuals.trajectories[t][i];
            }
        }
        poc::write_file_atomic(out_dir / "residuals.csv",
                               poc::to_csv({"trajectory", "index", "residual"},
                                           rows));
    }
    {
        poc::Matrix rows(residuals.trajectories.size() * sample.retained, 6);
        std::size_t r = 0;
        for (std::size_t t = 0; t < residuals.trajectories.size(); ++t) {
            const auto qq = poc::qq_reference(residuals.trajectories[t]);
            for (std::size_t i = 0; i < qq.size(); ++i, ++r) {
                rows(r, 0) = static_cast<double>(t);
                rows(r, 1) = static_cast<double>(i);
                rows(r, 2) = qq[i].theoretical;
                rows(r, 3) = qq[i].observed;
                rows(r, 4) = qq[i].band_lo;
                rows(r, 5) = qq[i].band_hi;
            }
        }
        poc::write_file_atomic(
            out_dir / "qq.csv",
            poc::to_csv({"trajectory", "rank", "theoretical", "observed",
                         "band_lo", "band_hi"},
                        rows));
    }
    json config{{"model", model_path.string()},
                {"data", data_path.string()},
                {"trajectories", trajectories},
                {"q", q},
                {"seed", seed}};
    write_manifest(out_dir, "diagnose", config,
                   {model_path, data_path, mapping_path},
                   {"residuals.csv", "qq.csv"});
    return 0;
}

// ------------------------------------------------------------------ study

int default_replicates(poc::ScenarioId id) {
    return poc::scenario_dim(id) == 1 ? 100 : 50;
}

int cmd_study(const std::string& scenarios_arg, const std::string& sizes_arg,
              int replicates_override, std::uint64_t seed, double q,
              int max_iter, const std::string& step_mode, double lr,
              int threads, bool full_scale, const fs::path& out_dir) {
    std::vector<poc::ScenarioId> scenarios;
    {
        std::stringstream ss(scenarios_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                scenarios.push_back(poc::scenario_from_name(tok));
            } catch (const std::exception& e) {
                throw UsageError(e.what());
            }
        }
    }
    std::vector<std::size_t> sizes;
    {
        std::stringstream ss(sizes_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) sizes.push_back(std::stoul(tok));
    }
    if (scenarios.empty() || sizes.empty())
        throw UsageError("study needs at least one scenario and one size");

    ensure_out_dir(out_dir);
    poc::FitConfig config;
    config.max_iterations = max_iter;
    config.step_mode = parse_step_mode(step_mode);
    config.learning_rate = lr;

    std::vector<std::string> outputs;
    json table_cells = json::array();

    for (const auto id : scenarios) {
        for (const auto n : sizes) {
            const int m = full_scale ? 500
                          : replicates_override > 0 ? replicates_override
                                                    : default_replicates(id);
            const std::string tag =
                poc::scenario_name(id) + "_" + std::to_string(n);
            const fs::path cell_path = out_dir / ("cell_" + tag + ".json");
            const json resume_key{{"scenario", poc::scenario_name(id)},
                                  {"n", n},
                                  {"replicates", m},
                                  {"seed", seed},
                                  {"q", q},
                                  {"max_iterations", max_iter},
                                  {"step_mode", step_mode},
                                  {"learning_rate", lr}};

            json cell;
            bool reused = false;
            if (fs::exists(cell_path)) {
                try {
                    cell = json::parse(poc::read_file(cell_path));
                    reused = cell.value("resume_key", json()) == resume_key;
                } catch (const std::exception&) {
                    reused = false;
                }
            }
            if (!reused) {
                const poc::StudySummary summary =
                    poc::monte_carlo(id, n, m, seed, config, threads, q);
                const int j_cats = poc::scenario_categories(id);
                const int d = poc::scenario_dim(id);

                // Per-replicate records.
                std::vector<std::string> header{"replicate", "seed", "n_u",
                                                "final_loss"};
                for (int j = 0; j < j_cats; ++j)
                    header.push_back(j_cats == 1
                                         ? std::string("mise")
                                         : "mise" + std::to_string(j + 1));
                poc::Matrix rows(summary.records.size(), header.size());
                for (std::size_t r = 0; r < summary.records.size(); ++r) {
                    const auto& rec = summary.records[r];
                    rows(r, 0) = rec.replicate;
                    rows(r, 1) = static_cast<double>(rec.seed);
                    rows(r, 2) = static_cast<double>(rec.retained);
                    rows(r, 3) = rec.ok ? rec.final_loss : std::nan("");
                    for (int j = 0; j < j_cats; ++j)
                        rows(r, 4 + static_cast<std::size_t>(j)) =
                            rec.ok ? rec.mise[static_cast<std::size_t>(j)]
                                   : std::nan("");
                }
                poc::write_file_atomic(out_dir / ("replicates_" + tag + ".csv"),
                                       poc::to_csv(header, rows));

                // Grid surface: coordinates, truth, Monte Carlo mean estimate.
                std::vector<std::string> sheader;
                for (int j = 0; j < d; ++j)
                    sheader.push_back("x" + std::to_string(j + 1));
                for (int j = 0; j < j_cats; ++j)
                    sheader.push_back(j_cats == 1
                                          ? std::string("truth")
                                          : "truth" + std::to_string(j + 1));
                for (int j = 0; j < j_cats; ++j)
                    sheader.push_back(j_cats == 1
                                          ? std::string("estimate_mean")
                                          : "estimate_mean" + std::to_string(j + 1));
                poc::Matrix srows(summary.grid.rows, sheader.size());
                for (std::size_t r = 0; r < summary.grid.rows; ++r) {
                    std::size_t c = 0;
                    for (std::size_t j = 0; j < summary.grid.cols; ++j)
                        srows(r, c++) = summary.grid(r, j);
                    for (std::size_t j = 0; j < summary.truth.cols; ++j)
                        srows(r, c++) = summary.truth(r, j);
                    for (std::size_t j = 0; j < summary.mean_estimate.cols; ++j)
                        srows(r, c++) = summary.mean_estimate(r, j);
                }
                poc::write_file_atomic(out_dir / ("surface_" + tag + ".csv"),
                                       poc::to_csv(sheader, srows));

                cell = json{{"resume_key", resume_key},
                            {"failures", summary.failures},
                            {"mean_curve_mise", summary.mean_curve_mise},
                            {"mean_mise", summary.mean_mise},
                            {"median_mise", summary.median_mise}};
                poc::write_file_atomic(cell_path, cell.dump(2) + "\n");
            }
            outputs.push_back("cell_" + tag + ".json");
            outputs.push_back("replicates_" + tag + ".csv");
            outputs.push_back("surface_" + tag + ".csv");

            const auto curve = cell.at("mean_curve_mise").get<std::vector<double>>();
            const auto mean = cell.at("mean_mise").get<std::vector<double>>();
            const auto median = cell.at("median_mise").get<std::vector<double>>();
            for (std::size_t j = 0; j < curve.size(); ++j) {
                std::string label = poc::scenario_name(id);
                if (curve.size() > 1) label += " (j=" + std::to_string(j + 1) + ")";
                table_cells.push_back({{"scenario", label},
                                       {"n", n},
                                       {"replicates", m},
                                       {"failures", cell.value("failures", 0)},
                                       {"mise", curve[j]},
                                       {"mean_replicate_mise", mean[j]},
                                       {"median_replicate_mise", median[j]}});
            }
        }
    }

    // table.csv: one row per (scenario-or-category, n).
    {
        std::string csv =
            "scenario,n,replicates,failures,mise,mean_replicate_mise,"
            "median_replicate_mise\n";
        for (const auto& cell : table_cells) {
            csv += cell.at("scenario").get<std::string>();
            csv += "," + std::to_string(cell.at("n").get<std::size_t>());
            csv += "," + std::to_string(cell.at("replicates").get<int>());
            csv += "," + std::to_string(cell.at("failures").get<int>());
            csv += "," + poc::format_double(cell.at("mise").get<double>());
            csv += "," +
                   poc::format_double(cell.at("mean_replicate_mise").get<double>());
            csv += "," + poc::format_double(
                             cell.at("median_replicate_mise").get<double>());
            csv += "\n";
        }
        poc::write_file_atomic(out_dir / "table.csv", csv);
    }
    // table.txt: scenario rows by sample-size columns.
    {
        std::string txt = "Scenario";
        for (auto n : sizes) txt += "\t" + std::to_string(n);
        txt += "\n";
        std::vector<std::string> labels;
        for (const auto& cell : table_cells) {
            const auto label = cell.at("scenario").get<std::string>();
            if (std::find(labels.begin(), labels.end(), label) == labels.end())
                labels.push_back(label);
        }
        for (const auto& label : labels) {
            txt += label;
            for (auto n : sizes) {
                for (const auto& cell : table_cells) {
                    if (cell.at("scenario").get<std::string>() == label &&
                        cell.at("n").get<std::size_t>() == n) {
                        char buf[24];
                        std::snprintf(buf, sizeof buf, "%.3e",
                                      cell.at("mise").get<double>());
                        txt += std::string("\t") + buf;
                    }
                }
            }
            txt += "\n";
        }
        poc::write_file_atomic(out_dir / "table.txt", txt);
    }
    outputs.push_back("table.csv");
    outputs.push_back("table.txt");

    json config_doc{{"scenarios", scenarios_arg}, {"sizes", sizes_arg},
                    {"replicates", replicates_override}, {"seed", seed},
                    {"q", q},           {"max_iterations", max_iter},
                    {"step_mode", step_mode}, {"learning_rate", lr},
                    {"full", full_scale}};
    write_manifest(out_dir, "study", config_doc, {}, outputs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"POC-surface estimation with KANE networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate artificial scenario data");
    std::string sim_scenario = "A1";
    std::size_t sim_n = 10000;
    std::uint64_t sim_seed = 1;
    double sim_q = 0.95;
    std::string sim_out = "out";
    sim->add_option("--scenario", sim_scenario, "Scenario id (A1,A2,B1,B2,C)")
        ->required();
    sim->add_option("--n", sim_n, "Observations to draw");
    sim->add_option("--seed", sim_seed, "Generator seed");
    sim->add_option("--q", sim_q, "Threshold quantile level");
    sim->add_option("--out", sim_out, "Output directory")->required();

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit a POC surface to CSV data");
    std::string fit_data, fit_mapping, fit_widths, fit_g = "sigmoid";
    std::string fit_out = "out";
    std::string fit_step = "fixed";
    double fit_q = 0.95, fit_lr = 0.03;
    int fit_p = 3, fit_m = 2, fit_layers = 3, fit_iter = 100;
    std::uint64_t fit_seed = 1;
    fit_cmd->add_option("--data", fit_data, "Input CSV")->required();
    fit_cmd->add_option("--mapping", fit_mapping, "Column-role mapping JSON")
        ->required();
    fit_cmd->add_option("--q", fit_q, "Threshold quantile level");
    fit_cmd->add_option("--p", fit_p, "Spline degree");
    fit_cmd->add_option("--m", fit_m, "Spline interval count");
    fit_cmd->add_option("--layers", fit_layers, "Total layer count (>= 3)");
    fit_cmd->add_option("--widths", fit_widths,
                        "Comma-separated layer widths (overrides --layers)");
    fit_cmd->add_option("--g", fit_g, "g-layer: sigmoid or softmax");
    fit_cmd->add_option("--seed", fit_seed, "Initialization seed");
    fit_cmd->add_option("--max-iter", fit_iter, "Optimizer iteration cap");
    fit_cmd->add_option("--step-mode", fit_step,
                        "Step rule: fixed (constant step) or wolfe");
    fit_cmd->add_option("--lr", fit_lr, "Step length for --step-mode fixed");
    fit_cmd->add_option("--out", fit_out, "Output directory")->required();

    // predict
    auto* pred = app.add_subcommand("predict", "Evaluate a fitted surface");
    std::string pred_model, pred_points, pred_out;
    int pred_grid = 0;
    pred->add_option("--model", pred_model, "Model document")->required();
    pred->add_option("--grid-points", pred_grid, "Points per axis on [0,1]^d");
    pred->add_option("--points", pred_points, "CSV of evaluation points");
    pred->add_option("--out", pred_out, "Output CSV")->required();

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "Randomized quantile residuals");
    std::string diag_model, diag_data, diag_mapping, diag_out = "out";
    double diag_q = 0.95;
    int diag_t = 10;
    std::uint64_t diag_seed = 1;
    diag->add_option("--model", diag_model, "Model document")->required();
    diag->add_option("--data", diag_data, "Input CSV")->required();
    diag->add_option("--mapping", diag_mapping, "Column-role mapping JSON")
        ->required();
    diag->add_option("--q", diag_q, "Threshold quantile level");
    diag->add_option("--T", diag_t, "Residual trajectories");
    diag->add_option("--seed", diag_seed, "Residual seed");
    diag->add_option("--out", diag_out, "Output directory")->required();

    // study
    auto* study = app.add_subcommand("study", "Monte Carlo study over scenarios");
    std::string study_scenarios = "A1", study_sizes = "10000";
    std::string study_out = "out";
    int study_m = 0, study_iter = 100, study_threads = default_threads();
    std::uint64_t study_seed = 2000;
    double study_q = 0.95, study_lr = 0.03;
    std::string study_step = "fixed";
    bool study_full = false;
    study->add_option("--scenarios", study_scenarios,
                      "Comma-separated scenario ids");
    study->add_option("--sizes", study_sizes, "Comma-separated sample sizes");
    study->add_option("--replicates", study_m,
                      "Replicates per cell (0 = desk-scale default)");
    study->add_option("--seed", study_seed, "Base seed");
    study->add_option("--q", study_q, "Threshold quantile level");
    study->add_option("--max-iter", study_iter, "Optimizer iteration cap");
    study->add_option("--step-mode", study_step,
                      "Step rule: fixed (constant step) or wolfe");
    study->add_option("--lr", study_lr, "Step length for --step-mode fixed");
    study->add_option("--threads", study_threads, "Worker threads");
    study->add_flag("--full", study_full, "Paper-scale M = 500");
    study->add_option("--out", study_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
        if (sim->parsed())
            return cmd_simulate(sim_scenario, sim_n, sim_seed, sim_q, sim_out);
        if (fit_cmd->parsed())
            return cmd_fit(fit_data, fit_mapping, fit_q, fit_p, fit_m,
                           fit_layers, fit_widths, fit_g, fit_seed, fit_iter,
                           fit_step, fit_lr, fit_out);
        if (pred->parsed())
            return cmd_predict(pred_model, pred_grid, pred_points, pred_out);
        if (diag->parsed())
            return cmd_diagnose(diag_model, diag_data, diag_mapping, diag_q,
                                diag_t, diag_seed, diag_out);
        if (study->parsed())
            return cmd_study(study_scenarios, study_sizes, study_m, study_seed,
                             study_q, study_iter, study_step, study_lr,
                             study_threads, study_full, study_out);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
