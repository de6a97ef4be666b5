// Command-line front end: the trusted-initializer dealer, the two online
// parties, the plaintext oracle, the loopback benchmark, the labeled-corpus
// evaluator, and a lexicon collision report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "mpctext/dealer_service.hpp"
#include "mpctext/pipeline.hpp"

using namespace mpctext;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<uint8_t> parse_hex(const std::string& hex, size_t expect_bytes, const char* what) {
    if (hex.size() != expect_bytes * 2)
        throw config_error(std::string(what) + ": expected " + std::to_string(expect_bytes * 2) +
                           " hex characters");
    std::vector<uint8_t> out(expect_bytes);
    for (size_t i = 0; i < expect_bytes; i++) {
        const auto nibble = [&](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            throw config_error(std::string(what) + ": invalid hex character");
        };
        out[i] = uint8_t(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    }
    return out;
}

std::array<uint8_t, 32> parse_seed(const std::string& hex) {
    const auto bytes = parse_hex(hex, 32, "--seed");
    std::array<uint8_t, 32> s{};
    std::copy(bytes.begin(), bytes.end(), s.begin());
    return s;
}

std::pair<std::string, uint16_t> parse_hostport(const std::string& hp) {
    const size_t colon = hp.rfind(':');
    if (colon == std::string::npos || colon + 1 == hp.size())
        throw config_error("expected HOST:PORT, got '" + hp + "'");
    const int port = std::stoi(hp.substr(colon + 1));
    if (port < 0 || port > 65535) throw config_error("port out of range in '" + hp + "'");
    return {hp.substr(0, colon), uint16_t(port)};
}

DisclosurePolicy parse_policy(const std::string& s) {
    if (s == "bob") return DisclosurePolicy::to_bob;
    if (s == "alice") return DisclosurePolicy::to_alice;
    if (s == "both") return DisclosurePolicy::to_both;
    if (s == "shared") return DisclosurePolicy::keep_shared;
    throw config_error("--disclose must be one of bob|alice|both|shared");
}

std::optional<BucketSpec> parse_buckets(const std::vector<uint32_t>& v) {
    if (v.empty()) return {};
    if (v.size() != 3) throw config_error("--buckets expects t,s1,s2");
    return BucketSpec{v[0], v[1], v[2]};
}

void print_counters(const Outcome& out) {
    std::printf("rounds=%llu bytes_sent=%llu bytes_received=%llu wall=%.3fs\n",
                (unsigned long long)out.counters.rounds,
                (unsigned long long)out.counters.bytes_sent,
                (unsigned long long)out.counters.bytes_received, out.counters.seconds);
    for (const auto& ph : out.phases)
        std::printf("phase %-9s rounds=%-5llu bytes=%-9llu t=%.3fs\n", ph.name.c_str(),
                    (unsigned long long)ph.rounds,
                    (unsigned long long)(ph.bytes_sent + ph.bytes_received), ph.seconds);
}

// Shared flags for the two online parties and the oracle.
struct HashFlags {
    uint64_t p = HashParams{}.p;
    uint64_t a = HashParams{}.a;
    uint64_t b = HashParams{}.b;
    int token_bits = 0;  // 0 = take from bundle/default

    void attach(CLI::App* cmd) {
        cmd->add_option("--hash-p", p, "Carter-Wegman prime modulus");
        cmd->add_option("--hash-a", a, "Carter-Wegman multiplier");
        cmd->add_option("--hash-b", b, "Carter-Wegman offset");
        cmd->add_option("--token-bits", token_bits, "token id bit-length l");
    }

    HashParams params(int default_l) const {
        HashParams hp{p, a, b, token_bits ? token_bits : default_l};
        hp.validate();
        return hp;
    }
};

// Builds the session params shared by alice and bob from a loaded bundle
// profile plus command-line overrides (which must not contradict the bundle).
SessionParams session_from_bundle(const RandomnessBundle& bundle, const HashFlags& hash,
                                  const std::vector<uint32_t>& buckets_flag, uint32_t pad_to,
                                  bool no_pad, const std::string& policy) {
    const DemandProfile& pr = bundle.profile;
    if (hash.token_bits && hash.token_bits != pr.l)
        throw config_error("--token-bits disagrees with the bundle profile (l=" +
                           std::to_string(pr.l) + ")");
    if (const auto buckets = parse_buckets(buckets_flag)) {
        if (!pr.buckets || !(*pr.buckets == *buckets))
            throw config_error("--buckets disagrees with the bundle profile");
    }
    if (pad_to && pad_to != pr.m)
        throw config_error("--pad-to disagrees with the bundle profile (m=" +
                           std::to_string(pr.m) + ")");
    if (no_pad && pr.tagged && !pr.buckets)
        throw config_error("--no-pad given but the bundle was dealt for a padded session");

    SessionParams sp;
    sp.profile = pr;
    sp.hash = hash.params(pr.l);
    sp.policy = parse_policy(policy);
    sp.validate();
    return sp;
}

int cmd_deal(uint32_t n, uint32_t m, int l, const std::string& model_kind,
             const std::vector<uint32_t>& buckets_flag, bool no_pad, const std::string& seed_hex,
             const std::string& out_alice, const std::string& out_bob,
             const std::string& listen) {
    DemandProfile pr;
    pr.n = n;
    pr.m = m;
    pr.l = l;
    if (model_kind == "lr") pr.kind = ModelKind::lr;
    else if (model_kind == "ada") pr.kind = ModelKind::ada;
    else throw config_error("--model must be lr or ada");
    pr.buckets = parse_buckets(buckets_flag);
    pr.tagged = !no_pad || pr.buckets.has_value();
    pr.validate();

    const bool files = !out_alice.empty() || !out_bob.empty();
    if (files && (out_alice.empty() || out_bob.empty()))
        throw config_error("--out-alice and --out-bob must be given together");
    if (!files && listen.empty())
        throw config_error("choose a distribution mode: --out-alice/--out-bob or --listen");

    std::optional<std::array<uint8_t, 32>> seed;
    if (!seed_hex.empty()) seed = parse_seed(seed_hex);

    const Demand d = count_demand(pr);
    auto [alice, bob] = deal(pr, seed);

    std::printf("dealt session randomness (n=%u m=%u l=%d model=%s%s%s)\n", n, m, l,
                model_kind.c_str(), pr.buckets ? " bucketized" : "",
                seed ? " [SEEDED: insecure, test use only]" : "");
    std::printf("  z2 triples: %llu, zq triples: %llu\n", (unsigned long long)d.z2_triples(),
                (unsigned long long)d.zq_triples());
    std::printf("  masks (alice): z2=%llu zq=%llu; masks (bob): z2=%llu zq=%llu\n",
                (unsigned long long)d.z2_masks(Party::alice),
                (unsigned long long)d.zq_masks(Party::alice),
                (unsigned long long)d.z2_masks(Party::bob),
                (unsigned long long)d.zq_masks(Party::bob));

    if (files) {
        persist_bundle(alice, out_alice);
        persist_bundle(bob, out_bob);
        std::printf("  wrote %s and %s\n", out_alice.c_str(), out_bob.c_str());
    }
    if (!listen.empty()) {
        const auto [host, port] = parse_hostport(listen);
        TcpListener listener(host, port);
        std::printf("serving bundles on %s:%u; exits once both parties fetched\n", host.c_str(),
                    listener.port());
        std::fflush(stdout);
        serve_bundles(listener, alice, bob);
        std::printf("both bundles delivered; dealer done\n");
    }
    return 0;
}

RandomnessBundle obtain_bundle(const std::string& bundle_path, const std::string& bundle_from,
                               Party party, int timeout_s) {
    if (bundle_path.empty() == bundle_from.empty())
        throw config_error("give exactly one of --bundle FILE or --bundle-from HOST:PORT");
    if (!bundle_path.empty()) return load_bundle(bundle_path);
    const auto [host, port] = parse_hostport(bundle_from);
    // The dealer connection closes inside fetch_bundle, before the session.
    return fetch_bundle(host, port, party, Millis(int64_t(timeout_s) * 1000));
}

int cmd_alice(const std::string& text_file, const std::string& connect,
              const std::string& bundle_path, const std::string& bundle_from,
              const HashFlags& hash, const std::vector<uint32_t>& buckets_flag, uint32_t pad_to,
              bool no_pad, const std::string& policy, int timeout_s,
              const std::string& session_hex) {
    const RandomnessBundle bundle =
        obtain_bundle(bundle_path, bundle_from, Party::alice, timeout_s);
    if (bundle.party != Party::alice) throw config_error("bundle belongs to bob");
    const SessionParams sp =
        session_from_bundle(bundle, hash, buckets_flag, pad_to, no_pad, policy);
    const std::string text = read_file(text_file);

    std::optional<SessionId> sid;
    if (!session_hex.empty()) {
        const auto bytes = parse_hex(session_hex, 16, "--session-id");
        sid.emplace();
        std::copy(bytes.begin(), bytes.end(), sid->begin());
    }

    const auto [host, port] = parse_hostport(connect);
    const Millis timeout(int64_t(timeout_s) * 1000);
    Transport t(tcp_connect(host, port, timeout), Party::alice);
    const Outcome out = run_alice(t, bundle, sp, text, sid);

    if (out.label) std::printf("label=%d\n", *out.label);
    else std::printf("label withheld by policy (--disclose %s)\n", policy.c_str());
    print_counters(out);
    return 0;
}

int cmd_bob(const std::string& model_path, const std::string& listen,
            const std::string& bundle_path, const std::string& bundle_from,
            const HashFlags& hash, const std::vector<uint32_t>& buckets_flag,
            const std::string& policy, int timeout_s) {
    const RandomnessBundle bundle =
        obtain_bundle(bundle_path, bundle_from, Party::bob, timeout_s);
    if (bundle.party != Party::bob) throw config_error("bundle belongs to alice");
    const SessionParams sp = session_from_bundle(bundle, hash, buckets_flag, 0, false, policy);
    const Model model = load_model(model_path);

    const auto [host, port] = parse_hostport(listen);
    TcpListener listener(host, port);
    std::printf("listening on %s:%u (one session; the bundle is single-use)\n", host.c_str(),
                listener.port());
    std::fflush(stdout);

    const Millis timeout(int64_t(timeout_s) * 1000);
    Transport t(listener.accept(timeout), Party::bob);
    const Outcome out = run_bob(t, bundle, sp, model);

    if (out.label) std::printf("label=%d\n", *out.label);
    else std::printf("label withheld by policy (--disclose %s)\n", policy.c_str());
    print_counters(out);
    return 0;
}

int cmd_oracle(const std::string& model_path, const std::string& text_file,
               const HashFlags& hash) {
    const Model model = load_model(model_path);
    const HashParams hp = hash.params(hash.token_bits ? hash.token_bits : HashParams{}.l);
    const int label = plaintext_classify(model, read_file(text_file), hp);
    std::printf("label=%d\n", label);
    return 0;
}

int cmd_bench(int jobs, const std::string& model_path, const std::string& text_file,
              const HashFlags& hash, const std::vector<uint32_t>& buckets_flag, uint32_t pad_to,
              const std::string& seed_hex, const std::string& csv_path, bool memory) {
    const Model model = load_model(model_path);
    const HashParams hp = hash.params(hash.token_bits ? hash.token_bits : HashParams{}.l);
    const std::string text = read_file(text_file);
    const SessionParams sp = make_session_params(model, hp, pad_to ? pad_to : 64,
                                                 parse_buckets(buckets_flag));

    std::vector<BatchJob> batch;
    for (int i = 0; i < jobs; i++) {
        BatchJob job{sp, text, model, {}};
        if (!seed_hex.empty()) {
            auto seed = parse_seed(seed_hex);
            seed[31] ^= uint8_t(i);  // distinct dealing per job
            job.seed = seed;
        }
        batch.push_back(std::move(job));
    }
    const BatchReport report = batch_classify(batch, /*over_tcp=*/!memory);
    const std::string csv = report.csv();
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        out << csv;
        std::printf("wrote %s (%zu jobs, %zu failed)\n", csv_path.c_str(), report.total,
                    report.failed);
    } else {
        std::fputs(csv.c_str(), stdout);
        if (report.failed)
            std::fprintf(stderr, "warning: %zu of %zu jobs failed\n", report.failed,
                         report.total);
    }
    return report.failed == 0 ? 0 : 1;
}

int cmd_eval(const std::string& model_path, const std::string& corpus_path,
             const HashFlags& hash, uint32_t pad_to, const std::string& seed_hex) {
    const Model model = load_model(model_path);
    const HashParams hp = hash.params(hash.token_bits ? hash.token_bits : HashParams{}.l);
    const auto corpus = load_corpus(corpus_path);
    const SessionParams sp = make_session_params(model, hp, pad_to ? pad_to : 64, {});

    std::optional<std::array<uint8_t, 32>> seed;
    if (!seed_hex.empty()) seed = parse_seed(seed_hex);

    const EvalResult res = evaluate_corpus(model, corpus, sp, seed);
    std::printf("messages:           %zu\n", res.count);
    std::printf("secure accuracy:    %.4f\n", res.secure_accuracy());
    std::printf("plain accuracy:     %.4f\n", res.plain_accuracy());
    std::printf("pipeline agreement: %zu/%zu (%.4f)\n", res.agree, res.count, res.agreement());
    return res.agree == res.count ? 0 : 1;
}

int cmd_collisions(const std::string& lexicon_path, const HashFlags& hash) {
    const HashParams hp = hash.params(hash.token_bits ? hash.token_bits : HashParams{}.l);
    std::ifstream in(lexicon_path);
    if (!in) throw format_error("cannot open " + lexicon_path);
    std::vector<std::string> features;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) features.push_back(line);

    std::map<uint32_t, std::vector<std::string>> by_id;
    for (const auto& f : features) by_id[hash_token(f, hp)].push_back(f);

    size_t collided = 0;
    for (const auto& [id, words] : by_id) {
        if (words.size() < 2) continue;
        collided += words.size();
        std::printf("id %u:", id);
        for (const auto& w : words) std::printf(" '%s'", w.c_str());
        std::printf("\n");
    }
    std::printf("%zu features, %zu distinct ids at l=%d, %zu features in collision\n",
                features.size(), by_id.size(), hp.l, collided);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-party secure text classification toolkit"};
    app.require_subcommand(1);

    // deal
    auto* deal_cmd = app.add_subcommand("deal", "generate correlated randomness (trusted dealer)");
    uint32_t n = 0, m = 0;
    int l = 13;
    std::string model_kind, seed_hex, out_alice, out_bob, deal_listen;
    std::vector<uint32_t> buckets_flag;
    bool no_pad = false;
    deal_cmd->add_option("--n", n, "Bob lexicon size")->required();
    deal_cmd->add_option("--m", m, "Alice token budget")->required();
    deal_cmd->add_option("--l", l, "token id bit-length");
    deal_cmd->add_option("--model", model_kind, "lr|ada")->required();
    deal_cmd->add_option("--buckets", buckets_flag, "t,s1,s2")->delimiter(',');
    deal_cmd->add_flag("--no-pad", no_pad, "size for an exact, unpadded token count");
    deal_cmd->add_option("--seed", seed_hex, "64 hex chars; deterministic (insecure) dealing");
    deal_cmd->add_option("--out-alice", out_alice, "Alice bundle path");
    deal_cmd->add_option("--out-bob", out_bob, "Bob bundle path");
    deal_cmd->add_option("--listen", deal_listen,
                         "serve bundles over HOST:PORT instead of (or besides) files");

    // alice classify
    auto* alice_cmd = app.add_subcommand("alice", "text-owner side");
    auto* alice_classify = alice_cmd->add_subcommand("classify", "classify a text file");
    std::string text_file, connect, bundle_path, bundle_from, policy = "bob", session_hex;
    uint32_t pad_to = 0;
    int timeout_s = 30;
    HashFlags alice_hash;
    bool alice_no_pad = false;
    std::vector<uint32_t> alice_buckets;
    alice_classify->add_option("--text-file", text_file, "UTF-8 text to classify")->required();
    alice_classify->add_option("--connect", connect, "HOST:PORT of bob")->required();
    alice_classify->add_option("--bundle", bundle_path, "Alice bundle file");
    alice_classify->add_option("--bundle-from", bundle_from, "fetch the bundle from a dealer HOST:PORT");
    alice_classify->add_option("--buckets", alice_buckets, "t,s1,s2 (must match bundle)")
        ->delimiter(',');
    alice_classify->add_option("--pad-to", pad_to, "token budget m (must match bundle)");
    alice_classify->add_flag("--no-pad", alice_no_pad, "expect an unpadded bundle");
    alice_classify->add_option("--disclose", policy, "bob|alice|both|shared");
    alice_classify->add_option("--session-timeout", timeout_s, "seconds");
    alice_classify->add_option("--session-id", session_hex, "32 hex chars (default random)");
    alice_hash.attach(alice_classify);

    // bob serve
    auto* bob_cmd = app.add_subcommand("bob", "model-owner side");
    auto* bob_serve = bob_cmd->add_subcommand("serve", "serve one classification session");
    std::string model_path, listen, bob_bundle_from;
    std::string bob_policy = "bob";
    int bob_timeout_s = 30;
    HashFlags bob_hash;
    std::vector<uint32_t> bob_buckets;
    bob_serve->add_option("--model", model_path, "model JSON file")->required();
    bob_serve->add_option("--listen", listen, "HOST:PORT to bind (port 0 = ephemeral)")
        ->required();
    bob_serve->add_option("--bundle", bundle_path, "Bob bundle file");
    bob_serve->add_option("--bundle-from", bob_bundle_from, "fetch the bundle from a dealer HOST:PORT");
    bob_serve->add_option("--buckets", bob_buckets, "t,s1,s2 (must match bundle)")
        ->delimiter(',');
    bob_serve->add_option("--disclose", bob_policy, "bob|alice|both|shared");
    bob_serve->add_option("--session-timeout", bob_timeout_s, "seconds");
    bob_hash.attach(bob_serve);

    // oracle classify
    auto* oracle_cmd = app.add_subcommand("oracle", "plaintext reference");
    auto* oracle_classify = oracle_cmd->add_subcommand("classify", "classify without MPC");
    std::string oracle_model, oracle_text;
    HashFlags oracle_hash;
    oracle_classify->add_option("--model", oracle_model, "model JSON file")->required();
    oracle_classify->add_option("--text-file", oracle_text, "UTF-8 text")->required();
    oracle_hash.attach(oracle_classify);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "repeated loopback sessions, CSV timings");
    int jobs = 3;
    std::string bench_model, bench_text, bench_seed, csv_path;
    uint32_t bench_pad = 0;
    bool bench_memory = false;
    HashFlags bench_hash;
    std::vector<uint32_t> bench_buckets;
    bench_cmd->add_option("--jobs", jobs, "number of sessions");
    bench_cmd->add_option("--model", bench_model, "model JSON file")->required();
    bench_cmd->add_option("--text-file", bench_text, "UTF-8 text")->required();
    bench_cmd->add_option("--buckets", bench_buckets, "t,s1,s2")->delimiter(',');
    bench_cmd->add_option("--pad-to", bench_pad, "token budget m (default 64)");
    bench_cmd->add_option("--seed", bench_seed, "64 hex chars; per-job seeds derived");
    bench_cmd->add_option("--csv", csv_path, "write the CSV here instead of stdout");
    bench_cmd->add_flag("--memory", bench_memory, "in-memory transport instead of TCP loopback");
    bench_hash.attach(bench_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "secure vs plaintext accuracy on a corpus");
    std::string eval_model, corpus_path, eval_seed;
    uint32_t eval_pad = 0;
    HashFlags eval_hash;
    eval_cmd->add_option("--model", eval_model, "model JSON file")->required();
    eval_cmd->add_option("--corpus", corpus_path, "TSV: label<TAB>text per line")->required();
    eval_cmd->add_option("--pad-to", eval_pad, "token budget m (default 64)");
    eval_cmd->add_option("--seed", eval_seed, "64 hex chars; deterministic dealing");
    eval_hash.attach(eval_cmd);

    // collisions
    auto* coll_cmd = app.add_subcommand("collisions", "hash-collision report for a lexicon");
    std::string lexicon_path;
    HashFlags coll_hash;
    coll_cmd->add_option("--lexicon", lexicon_path, "one feature per line")->required();
    coll_hash.attach(coll_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*deal_cmd)
            return cmd_deal(n, m, l, model_kind, buckets_flag, no_pad, seed_hex, out_alice,
                            out_bob, deal_listen);
        if (alice_cmd->got_subcommand(alice_classify))
            return cmd_alice(text_file, connect, bundle_path, bundle_from, alice_hash,
                             alice_buckets, pad_to, alice_no_pad, policy, timeout_s,
                             session_hex);
        if (bob_cmd->got_subcommand(bob_serve))
            return cmd_bob(model_path, listen, bundle_path, bob_bundle_from, bob_hash,
                           bob_buckets, bob_policy, bob_timeout_s);
        if (oracle_cmd->got_subcommand(oracle_classify))
            return cmd_oracle(oracle_model, oracle_text, oracle_hash);
        if (*bench_cmd)
            return cmd_bench(jobs, bench_model, bench_text, bench_hash, bench_buckets, bench_pad,
                             bench_seed, csv_path, bench_memory);
        if (*eval_cmd) return cmd_eval(eval_model, corpus_path, eval_hash, eval_pad, eval_seed);
        if (*coll_cmd) return cmd_collisions(lexicon_path, coll_hash);
        std::fprintf(stderr, "error: missing subcommand (see --help)\n");
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
