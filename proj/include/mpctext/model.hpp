#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mpctext/dealer.hpp"
#include "mpctext/fixedpoint.hpp"
#include "mpctext/text.hpp"

namespace mpctext {

// Logistic regression over binary features: class = [ <x,w> + b >= 0 ].
struct LRModel {
    std::vector<std::string> features;
    std::vector<double> weights;
    double intercept = 0;
    int fraction_bits = 16;
};

// AdaBoost over depth-1 stumps on binary features. y[i] = {y_i0, y_i1} are
// the weighted votes for class 0 when x_i = 0/1; z likewise for class 1.
// Class = [ p1 >= p0 ] with p_c the aggregated votes.
struct StumpModel {
    std::vector<std::string> features;
    std::vector<std::array<double, 2>> y, z;
    int fraction_bits = 16;
};

using Model = std::variant<LRModel, StumpModel>;

inline ModelKind model_kind(const Model& m) {
    return std::holds_alternative<LRModel>(m) ? ModelKind::lr : ModelKind::ada;
}

inline const std::vector<std::string>& model_features(const Model& m) {
    return std::visit([](const auto& mm) -> const std::vector<std::string>& { return mm.features; },
                      m);
}

inline int model_fraction_bits(const Model& m) {
    return std::visit([](const auto& mm) { return mm.fraction_bits; }, m);
}

// --- fixed-point encoding with overflow checks -----------------------------------

struct EncodedLR {
    std::vector<uint64_t> w;
    uint64_t b = 0;
    int f = 16;
};

// Flattened weighted-vote vectors: y[2i+k] pairs with the expanded feature
// vector (1-x_1, x_1, ..., 1-x_n, x_n).
struct EncodedStump {
    std::vector<uint64_t> y, z;
    int f = 16;
};

namespace detail {

inline void check_magnitude_sum(unsigned __int128 sum, const char* what) {
    if (sum >= (static_cast<unsigned __int128>(1) << 63))
        throw model_error(std::string(what) +
                          ": worst-case score overflows the sign bit; reduce weights or "
                          "fraction_bits");
}

}  // namespace detail

inline EncodedLR encode_model(const LRModel& m) {
    if (m.features.size() != m.weights.size())
        throw model_error("lr model: features/weights length mismatch");
    if (m.features.empty()) throw model_error("lr model: no features");
    EncodedLR enc;
    enc.f = m.fraction_bits;
    enc.w.reserve(m.weights.size());
    unsigned __int128 worst = 0;
    for (double w : m.weights) {
        const FixedPoint fp = encode_fp(w, m.fraction_bits);
        enc.w.push_back(fp.raw);
        worst += uint64_t(std::abs(fp_signed(fp)));
    }
    const FixedPoint fb = encode_fp(m.intercept, m.fraction_bits);
    enc.b = fb.raw;
    worst += uint64_t(std::abs(fp_signed(fb)));
    detail::check_magnitude_sum(worst, "lr model");
    return enc;
}

inline EncodedStump encode_model(const StumpModel& m) {
    const size_t n = m.features.size();
    if (n == 0) throw model_error("stump model: no features");
    if (m.y.size() != n || m.z.size() != n)
        throw model_error("stump model: y/z length must equal the feature count");
    EncodedStump enc;
    enc.f = m.fraction_bits;
    enc.y.reserve(2 * n), enc.z.reserve(2 * n);
    unsigned __int128 worst_y = 0, worst_z = 0;
    for (size_t i = 0; i < n; i++) {
        for (int k = 0; k < 2; k++) {
            if (m.y[i][k] < 0 || m.z[i][k] < 0)
                throw model_error("stump model: weighted probabilities must be non-negative");
            const FixedPoint fy = encode_fp(m.y[i][k], m.fraction_bits);
            const FixedPoint fz = encode_fp(m.z[i][k], m.fraction_bits);
            enc.y.push_back(fy.raw);
            enc.z.push_back(fz.raw);
        }
        worst_y += std::max(enc.y[2 * i], enc.y[2 * i + 1]);
        worst_z += std::max(enc.z[2 * i], enc.z[2 * i + 1]);
    }
    detail::check_magnitude_sum(worst_y, "stump model (y)");
    detail::check_magnitude_sum(worst_z, "stump model (z)");
    return enc;
}

// --- model files -------------------------------------------------------------------

inline Model parse_model(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        const int f = j.value("fraction_bits", 16);
        validate_fraction_bits(f);
        if (kind == "lr") {
            LRModel m;
            m.features = j.at("features").get<std::vector<std::string>>();
            m.weights = j.at("weights").get<std::vector<double>>();
            m.intercept = j.at("intercept").get<double>();
            m.fraction_bits = f;
            encode_model(m);  // load-time invariant check
            return m;
        }
        if (kind == "ada") {
            StumpModel m;
            m.features = j.at("features").get<std::vector<std::string>>();
            for (const auto& row : j.at("y")) {
                if (row.size() != 2) throw model_error("stump model: y rows must be pairs");
                m.y.push_back({row[0].get<double>(), row[1].get<double>()});
            }
            for (const auto& row : j.at("z")) {
                if (row.size() != 2) throw model_error("stump model: z rows must be pairs");
                m.z.push_back({row[0].get<double>(), row[1].get<double>()});
            }
            m.fraction_bits = f;
            encode_model(m);
            return m;
        }
        throw model_error("model: unknown kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("model json: ") + e.what());
    }
}

inline Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw format_error("model: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error("model json: " + std::string(e.what()));
    }
    return parse_model(j);
}

inline nlohmann::json model_to_json(const Model& model) {
    nlohmann::json j;
    if (const auto* lr = std::get_if<LRModel>(&model)) {
        j["kind"] = "lr";
        j["features"] = lr->features;
        j["weights"] = lr->weights;
        j["intercept"] = lr->intercept;
        j["fraction_bits"] = lr->fraction_bits;
    } else {
        const auto& ada = std::get<StumpModel>(model);
        j["kind"] = "ada";
        j["features"] = ada.features;
        auto rows = [](const std::vector<std::array<double, 2>>& v) {
            nlohmann::json out = nlohmann::json::array();
            for (const auto& r : v) out.push_back({r[0], r[1]});
            return out;
        };
        j["y"] = rows(ada.y);
        j["z"] = rows(ada.z);
        j["fraction_bits"] = ada.fraction_bits;
    }
    return j;
}

inline void save_model(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw format_error("model: cannot open " + path.string() + " for writing");
    out << model_to_json(model).dump(2) << "\n";
}

// --- plaintext oracle ----------------------------------------------------------------
// Reference classification in exact integer arithmetic over the encoded
// weights; this is what the secure path must agree with bit-for-bit.

inline int plaintext_classify_x(const Model& model, std::span<const uint8_t> x) {
    if (x.size() != model_features(model).size())
        throw usage_error("plaintext_classify: feature vector length mismatch");
    if (const auto* lr = std::get_if<LRModel>(&model)) {
        const EncodedLR enc = encode_model(*lr);
        __int128 score = int64_t(enc.b);
        for (size_t i = 0; i < x.size(); i++)
            if (x[i]) score += int64_t(enc.w[i]);
        return score >= 0 ? 1 : 0;
    }
    const EncodedStump enc = encode_model(std::get<StumpModel>(model));
    __int128 p0 = 0, p1 = 0;
    for (size_t i = 0; i < x.size(); i++) {
        p0 += int64_t(enc.y[2 * i + (x[i] ? 1 : 0)]);
        p1 += int64_t(enc.z[2 * i + (x[i] ? 1 : 0)]);
    }
    return p1 >= p0 ? 1 : 0;
}

inline std::vector<uint8_t> feature_vector(const Model& model, const TokenSet& tokens,
                                           const HashParams& hp) {
    const Lexicon lex = build_lexicon(model_features(model), hp);
    std::vector<uint8_t> x(lex.size(), 0);
    for (size_t i = 0; i < lex.size(); i++)
        x[i] = std::binary_search(tokens.ids.begin(), tokens.ids.end(), lex.ids[i]) ? 1 : 0;
    return x;
}

inline int plaintext_classify(const Model& model, const TokenSet& tokens, const HashParams& hp) {
    return plaintext_classify_x(model, feature_vector(model, tokens, hp));
}

inline int plaintext_classify(const Model& model, std::string_view text, const HashParams& hp) {
    return plaintext_classify(model, build_token_set(text, hp), hp);
}

}  // namespace mpctext
