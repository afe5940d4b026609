#include "poc/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace poc {

std::vector<double> make_cumulative_labels(const std::vector<int>& levels,
                                           int j, int categories) {
    if (j < 1 || j > categories - 1)
        throw std::out_of_range("cumulative split index out of 1..J-1");
    std::vector<double> flags(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 1 || levels[i] > categories)
            throw std::invalid_argument("ordinal level out of 1..J");
        flags[i] = levels[i] > j ? 1.0 : 0.0;
    }
    return flags;
}

std::vector<double> isotonic_non_increasing(std::vector<double> v) {
    // Pool adjacent violators on the reversed (non-decreasing) problem.
    const std::size_t n = v.size();
    std::vector<double> value;
    std::vector<std::size_t> weight;
    for (std::size_t i = 0; i < n; ++i) {
        value.push_back(v[i]);
        weight.push_back(1);
        while (value.size() > 1 && value[value.size() - 2] < value.back()) {
            const double merged =
                (value[value.size() - 2] * weight[weight.size() - 2] +
                 value.back() * weight.back()) /
                static_cast<double>(weight[weight.size() - 2] + weight.back());
            weight[weight.size() - 2] += weight.back();
            value[value.size() - 2] = merged;
            value.pop_back();
            weight.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < value.size(); ++b) {
        out.insert(out.end(), weight[b], value[b]);
    }
    return out;
}

std::vector<double> frank_hall_probs(std::vector<double> cumulative) {
    for (double& p : cumulative) p = std::clamp(p, 0.0, 1.0);
    cumulative = isotonic_non_increasing(std::move(cumulative));
    const std::size_t jm1 = cumulative.size();
    std::vector<double> probs(jm1 + 1);
    probs[0] = 1.0 - cumulative[0];
    for (std::size_t j = 1; j < jm1; ++j)
        probs[j] = cumulative[j - 1] - cumulative[j];
    probs[jm1] = cumulative[jm1 - 1];
    return probs;
}

double OrdinalSubModel::evaluate(std::span<const double> x) const {
    if (degenerate) return constant_rate;
    return estimate->net.forward(x)[0];
}

OrdinalModel fit_ordinal(const ThresholdedSample& data,
                         const std::vector<int>& widths, const SplineSpec& spec,
                         const FitConfig& config) {
    const int J = data.categories;
    if (J < 3) throw std::invalid_argument("ordinal fitting needs J >= 3");
    if (data.levels.size() != data.features.rows)
        throw std::invalid_argument("sample carries no ordinal levels");

    OrdinalModel model;
    model.categories = J;
    model.threshold = data.threshold;
    model.feature_dim = static_cast<int>(data.features.cols);
    model.sub_models.resize(static_cast<std::size_t>(J - 1));

    for (int j = 1; j <= J - 1; ++j) {
        auto& sub = model.sub_models[static_cast<std::size_t>(j - 1)];
        const auto labels = make_cumulative_labels(data.levels, j, J);
        double positives = 0.0;
        for (double f : labels) positives += f;
        if (positives == 0.0 || positives == static_cast<double>(labels.size())) {
            sub.degenerate = true;
            sub.constant_rate = positives / static_cast<double>(labels.size());
            continue;
        }
        ThresholdedSample binary = data;
        binary.levels.clear();
        binary.categories = 1;
        binary.outcomes = Matrix(labels.size(), 1);
        for (std::size_t i = 0; i < labels.size(); ++i)
            binary.outcomes(i, 0) = labels[i];
        FitConfig cfg = config;
        cfg.loss = LossKind::BinaryCE;
        cfg.init_seed = config.init_seed + static_cast<std::uint64_t>(j);
        sub.estimate = fit(binary, widths, spec, GLayer::sigmoid(), cfg);
    }
    return model;
}

std::vector<double> ordinal_category_probs(const OrdinalModel& model,
                                           std::span<const double> x) {
    std::vector<double> cumulative(model.sub_models.size());
    for (std::size_t j = 0; j < model.sub_models.size(); ++j)
        cumulative[j] = model.sub_models[j].evaluate(x);
    return frank_hall_probs(std::move(cumulative));
}

std::string OrdinalModel::to_document() const {
    nlohmann::json doc;
    doc["format"] = "frank-hall-ordinal";
    doc["version"] = 1;
    doc["categories"] = categories;
    doc["threshold"] = threshold;
    doc["feature_dim"] = feature_dim;
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& sub : sub_models) {
        if (sub.degenerate) {
            subs.push_back({{"degenerate", true}, {"rate", sub.constant_rate}});
        } else {
            subs.push_back(
                {{"degenerate", false},
                 {"model", nlohmann::json::parse(sub.estimate->net.to_document())}});
        }
    }
    doc["sub_models"] = std::move(subs);
    return doc.dump(2);
}

OrdinalModel OrdinalModel::from_document(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    if (doc.value("format", "") != "frank-hall-ordinal")
        throw std::invalid_argument("not a frank-hall-ordinal document");
    if (doc.value("version", 0) != 1)
        throw std::invalid_argument("unsupported ordinal document version");
    OrdinalModel model;
    model.categories = doc.at("categories").get<int>();
    model.threshold = doc.at("threshold").get<double>();
    model.feature_dim = doc.at("feature_dim").get<int>();
    for (const auto& entry : doc.at("sub_models")) {
        OrdinalSubModel sub;
        if (entry.value("degenerate", false)) {
            sub.degenerate = true;
            sub.constant_rate = entry.at("rate").get<double>();
        } else {
            KaneNetwork net =
                KaneNetwork::from_document(entry.at("model").dump());
            sub.estimate = PocEstimate{std::move(net), model.feature_dim,
                                       model.threshold, 0, {}};
        }
        model.sub_models.push_back(std::move(sub));
    }
    if (static_cast<int>(model.sub_models.size()) != model.categories - 1)
        throw std::invalid_argument("sub-model count must be J-1");
    return model;
}

}  // namespace poc
