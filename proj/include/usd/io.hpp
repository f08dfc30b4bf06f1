#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "usd/linalg.hpp"
#include "usd/optimize.hpp"
#include "usd/posterior.hpp"
#include "usd/simulate.hpp"

namespace usd {

using Json = nlohmann::ordered_json;

namespace detail {

inline Complex parse_complex(const Json& node, const std::string& where) {
    if (!node.is_array() || node.size() != 2 || !node[0].is_number() ||
        !node[1].is_number()) {
        throw InvalidInput(where + " must be a [real, imaginary] pair");
    }
    return Complex(node[0].get<double>(), node[1].get<double>());
}

inline Json complex_to_json(const Complex& z) {
    return Json::array({z.real(), z.imag()});
}

}  // namespace detail

/// Parses a problem description:
///   { "states": [[[re,im],...], ...], "priors": [...], "values": [...] }
/// `priors` and `values` are optional (uniform and all-ones defaults).
/// With `normalize` set, states of any nonzero length are accepted and
/// rescaled; otherwise the norm must already be within 1e-6 of 1.
inline StateEnsemble parse_problem(const Json& doc, bool normalize = false) {
    if (!doc.is_object()) throw InvalidInput("problem file: top level must be an object");
    if (!doc.contains("states") || !doc["states"].is_array() || doc["states"].empty()) {
        throw InvalidInput("problem file: missing or empty \"states\" array");
    }
    const auto& statesNode = doc["states"];
    const std::size_t n = statesNode.size();
    std::vector<StateVector> states;
    states.reserve(n);
    const double tolerance =
        normalize ? std::numeric_limits<double>::infinity() : kNormalizationTolerance;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& vecNode = statesNode[j];
        const std::string where = "states[" + std::to_string(j) + "]";
        if (!vecNode.is_array() || vecNode.size() != n) {
            throw InvalidInput(where + " must hold exactly " + std::to_string(n) +
                               " components (square problem)");
        }
        Vector v(static_cast<Eigen::Index>(n));
        for (std::size_t c = 0; c < n; ++c) {
            v(static_cast<Eigen::Index>(c)) = detail::parse_complex(
                vecNode[c], where + "[" + std::to_string(c) + "]");
        }
        try {
            states.emplace_back(std::move(v), tolerance);
        } catch (const InvalidInput& e) {
            throw InvalidInput(where + ": " + e.what());
        }
    }

    std::vector<double> priors;
    if (doc.contains("priors")) {
        if (!doc["priors"].is_array()) throw InvalidInput("\"priors\" must be an array");
        for (const auto& p : doc["priors"]) {
            if (!p.is_number()) throw InvalidInput("\"priors\" entries must be numbers");
            priors.push_back(p.get<double>());
        }
    }
    std::vector<double> values;
    if (doc.contains("values")) {
        if (!doc["values"].is_array()) throw InvalidInput("\"values\" must be an array");
        for (const auto& c : doc["values"]) {
            if (!c.is_number()) throw InvalidInput("\"values\" entries must be numbers");
            values.push_back(c.get<double>());
        }
    }
    return StateEnsemble(std::move(states), std::move(priors), std::move(values));
}

inline StateEnsemble load_problem(const std::string& path, bool normalize = false) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open problem file: " + path);
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput("problem file is not valid JSON: " + std::string(e.what()));
    }
    return parse_problem(doc, normalize);
}

/// Serializes a solution with its diagnostics. Numbers are emitted with
/// full round-trip precision so the file re-evaluates to the same gain.
inline Json solution_to_json(const Solution& solution, const DualSystem& duals,
                             std::optional<double> oracleGain = std::nullopt,
                             std::optional<double> oracleBound = std::nullopt) {
    Json out;
    out["k"] = solution.k.k;
    out["gain"] = solution.gain;
    out["inconclusiveProbability"] = solution.inconclusiveProbability;
    out["activeFace"] = solution.activeFace;
    Json detection = Json::array();
    for (double kj : solution.k.k) detection.push_back(kj * duals.gram.gramVolume);
    out["detectionProbabilities"] = std::move(detection);
    out["dualNormsSquared"] = duals.norms_squared();
    out["gramVolume"] = duals.gram.gramVolume;
    Json diag;
    diag["minEigenvalue"] = solution.minEigenvalue;
    diag["boundaryContact"] = solution.boundaryContact;
    diag["detInconclusive"] = det_inconclusive(duals, solution.k);
    if (oracleGain) {
        diag["oracleGain"] = *oracleGain;
        diag["oracleGap"] = solution.gain - *oracleGain;
        if (oracleBound) diag["oracleResolutionBound"] = *oracleBound;
    }
    out["diagnostics"] = std::move(diag);
    return out;
}

/// Minimal view of a solution file read back in.
struct ParsedSolution {
    std::vector<double> k;
    double gain = 0.0;
    double inconclusiveProbability = 0.0;
    std::vector<int> activeFace;
    double gramVolume = 0.0;
};

inline ParsedSolution parse_solution(const Json& doc) {
    ParsedSolution s;
    if (!doc.contains("k") || !doc["k"].is_array()) {
        throw InvalidInput("solution file: missing \"k\" array");
    }
    for (const auto& x : doc["k"]) s.k.push_back(x.get<double>());
    s.gain = doc.at("gain").get<double>();
    s.inconclusiveProbability = doc.at("inconclusiveProbability").get<double>();
    if (doc.contains("activeFace")) {
        for (const auto& x : doc["activeFace"]) s.activeFace.push_back(x.get<int>());
    }
    s.gramVolume = doc.at("gramVolume").get<double>();
    return s;
}

inline Json posterior_to_json(const PosteriorReport& report, bool mergedOnly = false) {
    constexpr double ln2 = 0.6931471805599453;
    Json out;
    out["initialEntropy"] = report.initialEntropy;
    out["initialEntropyBits"] = report.initialEntropy / ln2;
    out["inconclusiveProbability"] = report.inconclusiveProbability;
    if (!mergedOnly) {
        Json outcomes = Json::array();
        for (std::size_t m = 0; m < report.outcomes.size(); ++m) {
            Json o;
            o["label"] = report.outcomes[m].label;
            o["eigenvalue"] = report.outcomes[m].eigenvalue;
            Json vec = Json::array();
            const Vector& v = report.outcomes[m].eigenvector.components();
            for (Eigen::Index c = 0; c < v.size(); ++c) {
                vec.push_back(detail::complex_to_json(v(c)));
            }
            o["eigenvector"] = std::move(vec);
            o["jointProbabilities"] = report.jointProbabilities[m];
            o["posteriors"] = report.posteriors[m];
            o["entropy"] = report.outcomeEntropies[m];
            o["entropyBits"] = report.outcomeEntropies[m] / ln2;
            outcomes.push_back(std::move(o));
        }
        out["outcomes"] = std::move(outcomes);
        if (report.outcomes.empty()) {
            out["note"] = "inconclusive element is zero; every signal is always identified";
        }
    }
    if (!report.mergedPosteriors.empty()) {
        Json merged;
        merged["posteriors"] = report.mergedPosteriors;
        merged["entropy"] = report.mergedEntropy;
        merged["entropyBits"] = report.mergedEntropy / ln2;
        out["merged"] = std::move(merged);
    } else {
        out["merged"] = nullptr;
    }
    return out;
}

inline Json simulation_to_json(const SimulationReport& report) {
    Json out;
    out["trials"] = report.trials;
    out["seed"] = report.seed;
    out["splitInconclusive"] = report.splitInconclusive;
    out["outcomeLabels"] = report.outcomeLabels;
    out["counts"] = report.counts;
    out["empiricalInconclusive"] = report.empiricalInconclusive;
    out["analyticInconclusive"] = report.analyticInconclusive;
    out["maxDeviation"] = report.maxDeviation;
    out["standardErrorBound"] = report.standardErrorBound;
    out["misidentifications"] = report.misidentifications;
    return out;
}

}  // namespace usd
