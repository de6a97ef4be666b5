#pragma once

#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mpctext/model.hpp"
#include "mpctext/scoring.hpp"
#include "mpctext/text.hpp"
#include "mpctext/transport.hpp"

namespace mpctext {

// Everything both parties must agree on for one classification session.
// The SHA-224 digest of this struct is compared at handshake, so any
// configuration drift (different l, hash constants, policy, bucket shape)
// aborts before any secret-dependent message is sent.
struct SessionParams {
    DemandProfile profile;
    HashParams hash;
    uint64_t bucket_a2 = 48'271;
    uint64_t bucket_b2 = 16'127;
    DisclosurePolicy policy = DisclosurePolicy::to_bob;

    void validate() const {
        profile.validate();
        hash.validate();
        if (hash.l != profile.l)
            throw config_error("session: hash bit-length and profile bit-length disagree");
    }

    BucketLayout layout() const {
        return {profile.buckets.value_or(BucketSpec{}), bucket_a2, bucket_b2};
    }
};

inline ConfigDigest session_digest(const SessionParams& sp) {
    std::vector<uint8_t> buf;
    buf.push_back(uint8_t(kProtocolVersion & 0xff));
    buf.push_back(uint8_t(kProtocolVersion >> 8));
    detail::encode_profile(buf, sp.profile);
    put_u64_le(buf, sp.hash.p);
    put_u64_le(buf, sp.hash.a);
    put_u64_le(buf, sp.hash.b);
    buf.push_back(uint8_t(sp.hash.l));
    put_u64_le(buf, sp.bucket_a2);
    put_u64_le(buf, sp.bucket_b2);
    buf.push_back(uint8_t(sp.policy));
    return sha224(std::span<const uint8_t>(buf.data(), buf.size()));
}

// One party's prepared inputs: embedded items for extraction, plus (Bob
// only) the expanded fixed-point model aligned to the extraction layout.
struct SessionPlan {
    FeSpec fe;
    std::vector<uint64_t> my_items;
    std::vector<uint64_t> lr_w;
    uint64_t lr_b = 0;
    std::vector<uint64_t> ada_y, ada_z;
};

inline SessionPlan plan_alice(const SessionParams& sp, std::string_view text) {
    sp.validate();
    const TokenSet tokens = build_token_set(text, sp.hash);
    SessionPlan plan;
    plan.fe = FeSpec::from_profile(sp.profile);
    if (sp.profile.buckets) {
        if (tokens.size() > sp.profile.m)
            throw config_error("message has more distinct tokens than the session budget m");
        plan.my_items = alice_items_bucketized(tokens, sp.layout(), sp.hash);
    } else {
        plan.my_items =
            alice_items_direct(tokens, sp.profile.m, sp.profile.tagged, sp.hash.l);
    }
    return plan;
}

inline SessionPlan plan_bob(const SessionParams& sp, const Model& model) {
    sp.validate();
    if (model_kind(model) != sp.profile.kind)
        throw config_error("session profile and model file disagree on the model kind");
    const auto& feats = model_features(model);
    if (feats.size() != sp.profile.n)
        throw config_error("model has " + std::to_string(feats.size()) +
                           " features but the profile says n=" + std::to_string(sp.profile.n));

    const Lexicon lex = build_lexicon(feats, sp.hash);
    BobPlacement placement = sp.profile.buckets ? bob_items_bucketized(lex, sp.layout(), sp.hash)
                                                : bob_items_direct(lex);

    SessionPlan plan;
    plan.fe = FeSpec::from_profile(sp.profile);
    plan.my_items = std::move(placement.items);
    const uint32_t len = placement.expanded_len;

    if (const auto* lr = std::get_if<LRModel>(&model)) {
        const EncodedLR enc = encode_model(*lr);
        plan.lr_w.assign(len, 0);  // dummy features carry zero weight
        for (size_t i = 0; i < enc.w.size(); i++)
            plan.lr_w[placement.feature_pos[i]] = enc.w[i];
        plan.lr_b = enc.b;
    } else {
        const EncodedStump enc = encode_model(std::get<StumpModel>(model));
        plan.ada_y.assign(2 * size_t(len), 0);
        plan.ada_z.assign(2 * size_t(len), 0);
        for (size_t i = 0; i * 2 < enc.y.size(); i++) {
            const uint32_t pos = placement.feature_pos[i];
            plan.ada_y[2 * pos] = enc.y[2 * i];
            plan.ada_y[2 * pos + 1] = enc.y[2 * i + 1];
            plan.ada_z[2 * pos] = enc.z[2 * i];
            plan.ada_z[2 * pos + 1] = enc.z[2 * i + 1];
        }
    }
    return plan;
}

struct Outcome {
    std::optional<int> label;
    BitShare label_share;
    Counters counters;
    std::vector<PhaseStats> phases;
    std::vector<std::pair<uint32_t, uint32_t>> round_payloads;
    BundleView::Consumed consumed;
    uint64_t eq_tests = 0;
};

namespace detail {

inline Outcome finish_outcome(ProtocolContext& ctx, const ScoreResult& res) {
    Outcome out;
    out.label = res.label;
    out.label_share = res.label_share;
    out.counters = ctx.transport->counters();
    out.phases = ctx.transport->phases();
    out.round_payloads = ctx.transport->round_payloads();
    out.consumed = ctx.rnd.consumed();
    out.eq_tests = ctx.ops.eq_tests;
    return out;
}

}  // namespace detail

// The LR composition: extraction, ring conversion, scoring, disclosure. The
// extract/classify timing boundary sits after the conversion.
inline Outcome run_tc_lr(ProtocolContext& ctx, const SessionPlan& plan,
                         DisclosurePolicy policy) {
    const auto x2 = secure_feature_extract(ctx, plan.fe, plan.my_items);
    const auto xq = convert_2_to_q(ctx, x2);
    ctx.transport->mark_phase("extract");
    const auto res = secure_lr_classify(ctx, xq, plan.lr_w, plan.lr_b, policy);
    ctx.transport->mark_phase("classify");
    return detail::finish_outcome(ctx, res);
}

// The AdaBoost composition: same shape with stump scoring.
inline Outcome run_tc_ab(ProtocolContext& ctx, const SessionPlan& plan,
                         DisclosurePolicy policy) {
    const auto x2 = secure_feature_extract(ctx, plan.fe, plan.my_items);
    const auto xq = convert_2_to_q(ctx, x2);
    ctx.transport->mark_phase("extract");
    const auto res = secure_adaboost_classify(ctx, xq, plan.ada_y, plan.ada_z, policy);
    ctx.transport->mark_phase("classify");
    return detail::finish_outcome(ctx, res);
}

inline Outcome run_session(Transport& t, const RandomnessBundle& bundle, const SessionParams& sp,
                           const SessionPlan& plan, std::optional<SessionId> sid = {}) {
    if (bundle.party != t.party())
        throw usage_error("bundle was dealt to the other party");
    if (!(bundle.profile == sp.profile))
        throw config_error("bundle was dealt for a different session profile");
    t.handshake(session_digest(sp), sid);
    t.mark_phase("handshake");
    ProtocolContext ctx(t, bundle);
    Outcome out = sp.profile.kind == ModelKind::lr ? run_tc_lr(ctx, plan, sp.policy)
                                                   : run_tc_ab(ctx, plan, sp.policy);
    if (!ctx.rnd.fully_drained())
        throw randomness_error("session finished without draining the dealt pools exactly");
    return out;
}

inline Outcome run_alice(Transport& t, const RandomnessBundle& bundle, const SessionParams& sp,
                         std::string_view text, std::optional<SessionId> sid = {}) {
    return run_session(t, bundle, sp, plan_alice(sp, text), sid);
}

inline Outcome run_bob(Transport& t, const RandomnessBundle& bundle, const SessionParams& sp,
                       const Model& model, std::optional<SessionId> sid = {}) {
    return run_session(t, bundle, sp, plan_bob(sp, model), sid);
}

// --- local two-party execution ----------------------------------------------------

struct LocalRun {
    Outcome alice, bob;
};

// Runs both parties of one session in-process, over an in-memory duplex or
// a TCP loopback connection. Used by tests, the benchmark harness, and the
// corpus evaluator.
inline LocalRun run_local_session(const SessionParams& sp, std::string_view text,
                                  const Model& model,
                                  const std::optional<std::array<uint8_t, 32>>& seed = {},
                                  bool over_tcp = false, std::optional<SessionId> sid = {},
                                  Millis timeout = kDefaultTimeout) {
    const auto bundles = deal(sp.profile, seed);
    const RandomnessBundle& bundle_a = bundles.first;
    const RandomnessBundle& bundle_b = bundles.second;

    std::unique_ptr<Channel> ch_a, ch_b;
    std::optional<TcpListener> listener;
    if (!over_tcp) {
        auto pair = make_memory_pair(timeout);
        ch_a = std::move(pair.first);
        ch_b = std::move(pair.second);
    } else {
        listener.emplace("127.0.0.1", 0);
    }

    LocalRun run;
    std::exception_ptr err_a, err_b;
    const std::string text_copy(text);

    std::thread ta([&] {
        try {
            auto ch = over_tcp ? tcp_connect("127.0.0.1", listener->port(), timeout)
                               : std::move(ch_a);
            Transport t(std::move(ch), Party::alice);
            run.alice = run_alice(t, bundle_a, sp, text_copy, sid);
        } catch (...) {
            err_a = std::current_exception();
        }
    });
    std::thread tb([&] {
        try {
            auto ch = over_tcp ? listener->accept(timeout) : std::move(ch_b);
            Transport t(std::move(ch), Party::bob);
            run.bob = run_bob(t, bundle_b, sp, model, sid);
        } catch (...) {
            err_b = std::current_exception();
        }
    });
    ta.join();
    tb.join();
    if (err_a) std::rethrow_exception(err_a);
    if (err_b) std::rethrow_exception(err_b);
    return run;
}

// The disclosed label of a finished run, reconstructing when the policy kept
// it shared.
inline int run_label(const LocalRun& run, DisclosurePolicy policy) {
    if (policy == DisclosurePolicy::keep_shared)
        return int(reconstruct(run.alice.label_share, run.bob.label_share));
    if (run.bob.label) return *run.bob.label;
    if (run.alice.label) return *run.alice.label;
    throw usage_error("run_label: no party learned the label");
}

// --- batching / benchmarking -------------------------------------------------------

struct BatchJob {
    SessionParams params;
    std::string text;
    Model model;
    std::optional<std::array<uint8_t, 32>> seed;
};

struct BatchReport {
    size_t total = 0;
    size_t failed = 0;

    struct Row {
        std::string phase;
        double mean_s = 0;
        double std_s = 0;
        double rounds = 0;
        double bytes = 0;
    };
    std::vector<Row> rows;

    std::string csv() const {
        std::string out = "phase,mean_s,std_s,rounds,bytes\n";
        char line[160];
        for (const auto& r : rows) {
            std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.0f,%.0f\n", r.phase.c_str(),
                          r.mean_s, r.std_s, r.rounds, r.bytes);
            out += line;
        }
        return out;
    }
};

// Runs each job in isolation (a failure is counted, not fatal) and reports
// per-phase means over the successful runs, measured from Alice's side.
inline BatchReport batch_classify(std::span<const BatchJob> jobs, bool over_tcp = false) {
    BatchReport report;
    report.total = jobs.size();

    std::vector<std::string> order;
    std::map<std::string, std::vector<PhaseStats>> samples;
    for (const auto& job : jobs) {
        try {
            const LocalRun run = run_local_session(job.params, job.text, job.model, job.seed,
                                                   over_tcp);
            auto phases = run.alice.phases;
            phases.push_back({"total", run.alice.counters.rounds, run.alice.counters.bytes_sent,
                              run.alice.counters.bytes_received, run.alice.counters.seconds});
            for (const auto& ph : phases) {
                if (!samples.count(ph.name)) order.push_back(ph.name);
                samples[ph.name].push_back(ph);
            }
        } catch (const error&) {
            report.failed++;
        }
    }

    for (const auto& name : order) {
        const auto& v = samples[name];
        BatchReport::Row row;
        row.phase = name;
        double sum = 0, sum2 = 0, rounds = 0, bytes = 0;
        for (const auto& ph : v) {
            sum += ph.seconds;
            sum2 += ph.seconds * ph.seconds;
            rounds += double(ph.rounds);
            bytes += double(ph.bytes_sent + ph.bytes_received);
        }
        const double k = double(v.size());
        row.mean_s = sum / k;
        row.std_s = k > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / k) / (k - 1))) : 0.0;
        row.rounds = rounds / k;
        row.bytes = bytes / k;
        report.rows.push_back(row);
    }
    return report;
}

// --- labeled-corpus evaluation ------------------------------------------------------
// The accuracy hook: for any model and labeled corpus, the secure pipeline
// must agree with the plaintext pipeline on every message; accuracies are
// reported against the given labels.

inline std::vector<std::pair<int, std::string>> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw format_error("corpus: cannot open " + path.string());
    std::vector<std::pair<int, std::string>> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw format_error("corpus line " + std::to_string(lineno) +
                               ": expected 'label<TAB>text'");
        const std::string label = line.substr(0, tab);
        if (label != "0" && label != "1")
            throw format_error("corpus line " + std::to_string(lineno) + ": label must be 0 or 1");
        out.emplace_back(label == "1" ? 1 : 0, line.substr(tab + 1));
    }
    return out;
}

struct EvalResult {
    size_t count = 0;
    size_t agree = 0;
    size_t secure_correct = 0;
    size_t plain_correct = 0;

    double agreement() const { return count ? double(agree) / double(count) : 1.0; }
    double secure_accuracy() const { return count ? double(secure_correct) / double(count) : 0; }
    double plain_accuracy() const { return count ? double(plain_correct) / double(count) : 0; }
};

inline EvalResult evaluate_corpus(const Model& model,
                                  const std::vector<std::pair<int, std::string>>& corpus,
                                  const SessionParams& sp,
                                  const std::optional<std::array<uint8_t, 32>>& seed = {}) {
    EvalResult res;
    for (const auto& [label, text] : corpus) {
        const int plain = plaintext_classify(model, text, sp.hash);
        const LocalRun run = run_local_session(sp, text, model, seed);
        const int secure = run_label(run, sp.policy);
        res.count++;
        if (secure == plain) res.agree++;
        if (secure == label) res.secure_correct++;
        if (plain == label) res.plain_correct++;
    }
    return res;
}

inline SessionParams make_session_params(const Model& model, const HashParams& hash, uint32_t m,
                                         std::optional<BucketSpec> buckets,
                                         DisclosurePolicy policy = DisclosurePolicy::to_bob,
                                         bool tagged = true) {
    SessionParams sp;
    sp.profile.n = uint32_t(model_features(model).size());
    sp.profile.m = m;
    sp.profile.l = hash.l;
    sp.profile.kind = model_kind(model);
    sp.profile.tagged = tagged || buckets.has_value();
    sp.profile.buckets = buckets;
    sp.hash = hash;
    sp.policy = policy;
    sp.validate();
    return sp;
}

}  // namespace mpctext
