#pragma once

#include <iosfwd>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mm/core.hpp"
#include "mm/embedding.hpp"
#include "mm/query.hpp"

namespace mm {

struct Candidate {
    Utterance utterance;
    double similarity = 0.0;        // max cosine against the example corpus
    std::string nearest_example;    // id of the closest example
};

struct AuditEntry {
    int iteration = 0;
    std::string utterance_id;
    std::string action;  // "accept" | "reject"
    double similarity = 0.0;
    int outlier_rank = -1;  // 1-based; -1 when rejected before ranking
};

// Example corpus under construction plus the retrieval bookkeeping. The
// example corpus and the candidate pool are disjoint by id; the audit log
// replays to the current corpus exactly.
struct CollectionState {
    Corpus examples;
    std::vector<Candidate> pool;
    std::set<std::string> rejected_ids;
    int iteration = 0;
    std::vector<AuditEntry> audit;

    bool is_known(const std::string& utterance_id) const;
};

struct CollectionConfig {
    std::string seed_query;        // exactly one of seed_query / seed_corpus_path
    std::string seed_corpus_path;
    std::string background_path;
    double threshold = 0.85;
    int iterations = 3;
    std::string mode = "auto";     // "auto" | "interactive"
    int accept_per_iteration = 10; // q, auto mode
    std::string negation_query;    // optional; applied verbatim to candidates
};

// Background utterances matching the query, in corpus order.
Corpus seed_examples(const LexicalQuery& query, const Corpus& background,
                     const LexiconMap& lexicons);

// Background utterances not yet accepted/pooled/rejected whose max cosine
// against the example corpus reaches the threshold, sorted by similarity
// descending (ties by id ascending).
std::vector<Candidate> retrieve_similar(const CollectionState& state, const Corpus& background,
                                        const EmbeddingProvider& provider, double threshold);

// Keeps candidates for which the supplied (already negated) query is true;
// preserves order.
std::vector<Candidate> negation_filter(const std::vector<Candidate>& candidates,
                                       const LexicalQuery& query, const LexiconMap& lexicons);

// Orders candidates by descending cosine distance to the L2-normalized
// centroid of the example-corpus embeddings (ties by id ascending). The
// result is a permutation of the input.
std::vector<Candidate> rank_outliers(const CollectionState& state,
                                     const std::vector<Candidate>& candidates,
                                     const EmbeddingProvider& provider);

// Moves pooled candidates into the example corpus and logs them; ids must be
// pooled. ranks maps utterance id -> 1-based outlier rank for the audit log.
void accept(CollectionState& state, const std::vector<std::string>& ids,
            const std::map<std::string, int>& ranks);

// Terminal prompt, one candidate per line, y/n/quit. Returns false when the
// user quit; rejections are logged.
bool accept_interactive(CollectionState& state, const std::vector<Candidate>& ranked,
                        std::istream& in, std::ostream& out);

struct CollectionResult {
    CollectionState state;
    bool quit_requested = false;
};

// The iterative loop: retrieve -> optional negation filter -> outlier rank ->
// accept (auto top-q or interactive). Stops after `iterations` rounds or as
// soon as a round accepts nothing. Auto mode is fully deterministic.
CollectionResult run_iterations(const CollectionConfig& config, Corpus seed,
                                const Corpus& background, const LexiconMap& lexicons,
                                std::shared_ptr<const EmbeddingProvider> retrieval_provider,
                                std::shared_ptr<const EmbeddingProvider> outlier_provider = nullptr,
                                std::istream* interactive_in = nullptr,
                                std::ostream* interactive_out = nullptr);

// Applies the audit log's accepts to the seed corpus; reproduces the final
// example corpus exactly.
Corpus replay_audit(const Corpus& seed, const Corpus& background,
                    const std::vector<AuditEntry>& audit);

// JSONL {"iter","utterance_id","action","similarity","outlier_rank"}.
void write_audit_log(const std::vector<AuditEntry>& audit, const std::string& path);
std::vector<AuditEntry> read_audit_log(const std::string& path);

}  // namespace mm
