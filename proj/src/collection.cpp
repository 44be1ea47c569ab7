#include "mm/collection.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "mm/errors.hpp"

namespace mm {

using nlohmann::json;

bool CollectionState::is_known(const std::string& utterance_id) const {
    for (const auto& utt : examples.utterances) {
        if (utt.id == utterance_id) return true;
    }
    for (const auto& cand : pool) {
        if (cand.utterance.id == utterance_id) return true;
    }
    return rejected_ids.count(utterance_id) != 0;
}

Corpus seed_examples(const LexicalQuery& query, const Corpus& background,
                     const LexiconMap& lexicons) {
    Corpus seed;
    seed.id = "seed";
    for (const auto& utt : background.utterances) {
        if (eval_query(query, utt, lexicons)) {
            Utterance copy = utt;
            copy.index = seed.utterances.size();
            seed.utterances.push_back(std::move(copy));
        }
    }
    return seed;
}

std::vector<Candidate> retrieve_similar(const CollectionState& state, const Corpus& background,
                                        const EmbeddingProvider& provider, double threshold) {
    if (state.examples.empty()) {
        throw StateError("retrieval requires a non-empty example corpus");
    }

    std::vector<std::string> example_texts;
    example_texts.reserve(state.examples.size());
    for (const auto& utt : state.examples.utterances) example_texts.push_back(utt.text);
    const auto example_embs = provider.embed_batch(example_texts);

    std::vector<const Utterance*> fresh;
    std::vector<std::string> fresh_texts;
    for (const auto& utt : background.utterances) {
        if (state.is_known(utt.id)) continue;
        fresh.push_back(&utt);
        fresh_texts.push_back(utt.text);
    }
    const auto fresh_embs = provider.embed_batch(fresh_texts);

    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        double best = -2.0;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < example_embs.size(); ++j) {
            const double sim = unit_cosine(fresh_embs[i], example_embs[j]);
            if (sim > best) {
                best = sim;
                best_j = j;
            }
        }
        if (best >= threshold) {
            Candidate cand;
            cand.utterance = *fresh[i];
            cand.similarity = best;
            cand.nearest_example = state.examples.utterances[best_j].id;
            candidates.push_back(std::move(cand));
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.utterance.id < b.utterance.id;
    });
    return candidates;
}

std::vector<Candidate> negation_filter(const std::vector<Candidate>& candidates,
                                       const LexicalQuery& query, const LexiconMap& lexicons) {
    std::vector<Candidate> kept;
    kept.reserve(candidates.size());
    for (const auto& cand : candidates) {
        if (eval_query(query, cand.utterance, lexicons)) kept.push_back(cand);
    }
    return kept;
}

std::vector<Candidate> rank_outliers(const CollectionState& state,
                                     const std::vector<Candidate>& candidates,
                                     const EmbeddingProvider& provider) {
    if (state.examples.empty()) {
        throw StateError("outlier ranking requires a non-empty example corpus");
    }
    if (candidates.empty()) return {};

    std::vector<std::string> example_texts;
    for (const auto& utt : state.examples.utterances) example_texts.push_back(utt.text);
    const auto example_embs = provider.embed_batch(example_texts);

    std::vector<double> centroid(provider.dimension(), 0.0);
    for (const auto& emb : example_embs) {
        for (std::size_t d = 0; d < centroid.size(); ++d) centroid[d] += emb[d];
    }
    for (double& x : centroid) x /= static_cast<double>(example_embs.size());
    normalize_or_e0(centroid);

    std::vector<std::string> cand_texts;
    for (const auto& cand : candidates) cand_texts.push_back(cand.utterance.text);
    const auto cand_embs = provider.embed_batch(cand_texts);

    std::vector<std::size_t> order(candidates.size());
    std::vector<double> distance(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        order[i] = i;
        distance[i] = 1.0 - unit_cosine(cand_embs[i], centroid);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (distance[a] != distance[b]) return distance[a] > distance[b];
        return candidates[a].utterance.id < candidates[b].utterance.id;
    });

    std::vector<Candidate> ranked;
    ranked.reserve(candidates.size());
    for (std::size_t i : order) ranked.push_back(candidates[i]);
    return ranked;
}

void accept(CollectionState& state, const std::vector<std::string>& ids,
            const std::map<std::string, int>& ranks) {
    for (const auto& id : ids) {
        auto it = std::find_if(state.pool.begin(), state.pool.end(),
                               [&](const Candidate& c) { return c.utterance.id == id; });
        if (it == state.pool.end()) {
            throw LookupError("accept: utterance \"" + id + "\" is not pooled");
        }
        Candidate cand = std::move(*it);
        state.pool.erase(it);

        AuditEntry entry;
        entry.iteration = state.iteration;
        entry.utterance_id = id;
        entry.action = "accept";
        entry.similarity = cand.similarity;
        auto rank_it = ranks.find(id);
        entry.outlier_rank = rank_it == ranks.end() ? -1 : rank_it->second;
        state.audit.push_back(entry);

        cand.utterance.index = state.examples.utterances.size();
        state.examples.utterances.push_back(std::move(cand.utterance));
    }
}

bool accept_interactive(CollectionState& state, const std::vector<Candidate>& ranked,
                        std::istream& in, std::ostream& out) {
    int rank = 0;
    for (const auto& cand : ranked) {
        ++rank;
        out << "[" << rank << "/" << ranked.size() << "] " << cand.utterance.id
            << " (sim " << cand.similarity << ", nearest " << cand.nearest_example << ")\n  \""
            << cand.utterance.text << "\"\naccept? [y/n/q] " << std::flush;
        std::string line;
        if (!std::getline(in, line)) return false;
        const char c = line.empty() ? 'n' : static_cast<char>(std::tolower(line[0]));
        if (c == 'q') return false;
        if (c == 'y') {
            accept(state, {cand.utterance.id}, {{cand.utterance.id, rank}});
        } else {
            auto it = std::find_if(state.pool.begin(), state.pool.end(), [&](const Candidate& p) {
                return p.utterance.id == cand.utterance.id;
            });
            if (it != state.pool.end()) {
                AuditEntry entry;
                entry.iteration = state.iteration;
                entry.utterance_id = cand.utterance.id;
                entry.action = "reject";
                entry.similarity = cand.similarity;
                entry.outlier_rank = rank;
                state.audit.push_back(entry);
                state.rejected_ids.insert(cand.utterance.id);
                state.pool.erase(it);
            }
        }
    }
    return true;
}

CollectionResult run_iterations(const CollectionConfig& config, Corpus seed,
                                const Corpus& background, const LexiconMap& lexicons,
                                std::shared_ptr<const EmbeddingProvider> retrieval_provider,
                                std::shared_ptr<const EmbeddingProvider> outlier_provider,
                                std::istream* interactive_in, std::ostream* interactive_out) {
    const bool same_provider = !outlier_provider || outlier_provider == retrieval_provider;
    const auto retrieval = std::make_shared<CachingProvider>(std::move(retrieval_provider));
    const auto outlier = same_provider
                             ? retrieval
                             : std::make_shared<CachingProvider>(std::move(outlier_provider));

    CollectionResult result;
    result.state.examples = std::move(seed);
    if (result.state.examples.empty()) {
        throw StateError("collection requires a non-empty seed corpus");
    }

    std::optional<LexicalQuery> negation;
    if (!config.negation_query.empty()) negation = parse_query(config.negation_query);

    const bool interactive = config.mode == "interactive";
    if (interactive && (!interactive_in || !interactive_out)) {
        throw ConfigError("interactive collection requires terminal streams");
    }

    for (int iter = 1; iter <= config.iterations; ++iter) {
        result.state.iteration = iter;

        auto candidates = retrieve_similar(result.state, background, *retrieval, config.threshold);
        if (negation) {
            auto kept = negation_filter(candidates, *negation, lexicons);
            std::set<std::string> kept_ids;
            for (const auto& c : kept) kept_ids.insert(c.utterance.id);
            for (const auto& c : candidates) {
                if (kept_ids.count(c.utterance.id)) continue;
                AuditEntry entry;
                entry.iteration = iter;
                entry.utterance_id = c.utterance.id;
                entry.action = "reject";
                entry.similarity = c.similarity;
                entry.outlier_rank = -1;
                result.state.audit.push_back(entry);
                result.state.rejected_ids.insert(c.utterance.id);
            }
            candidates = std::move(kept);
        }
        for (auto& cand : candidates) result.state.pool.push_back(std::move(cand));

        const auto ranked = rank_outliers(result.state, result.state.pool, *outlier);

        std::size_t accepted = 0;
        if (interactive) {
            const std::size_t before = result.state.examples.size();
            const bool keep_going =
                accept_interactive(result.state, ranked, *interactive_in, *interactive_out);
            accepted = result.state.examples.size() - before;
            if (!keep_going) {
                result.quit_requested = true;
                break;
            }
        } else {
            std::vector<std::string> ids;
            std::map<std::string, int> ranks;
            for (std::size_t i = 0;
                 i < ranked.size() && i < static_cast<std::size_t>(config.accept_per_iteration);
                 ++i) {
                ids.push_back(ranked[i].utterance.id);
                ranks[ranked[i].utterance.id] = static_cast<int>(i + 1);
            }
            accept(result.state, ids, ranks);
            accepted = ids.size();
        }
        if (accepted == 0) break;  // nothing new can appear in later rounds
    }
    return result;
}

Corpus replay_audit(const Corpus& seed, const Corpus& background,
                    const std::vector<AuditEntry>& audit) {
    std::unordered_map<std::string, const Utterance*> by_id;
    for (const auto& utt : background.utterances) by_id[utt.id] = &utt;

    Corpus corpus = seed;
    for (const auto& entry : audit) {
        if (entry.action != "accept") continue;
        auto it = by_id.find(entry.utterance_id);
        if (it == by_id.end()) {
            throw LookupError("audit references unknown utterance \"" + entry.utterance_id + "\"");
        }
        Utterance utt = *it->second;
        utt.index = corpus.utterances.size();
        corpus.utterances.push_back(std::move(utt));
    }
    return corpus;
}

void write_audit_log(const std::vector<AuditEntry>& audit, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    for (const auto& entry : audit) {
        out << json{{"iter", entry.iteration},
                    {"utterance_id", entry.utterance_id},
                    {"action", entry.action},
                    {"similarity", entry.similarity},
                    {"outlier_rank", entry.outlier_rank}}
                   .dump()
            << '\n';
    }
}

std::vector<AuditEntry> read_audit_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("missing audit log: " + path);
    std::vector<AuditEntry> audit;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw ParseError(path + ": malformed audit entry", lineno, 1);
        AuditEntry entry;
        entry.iteration = doc.at("iter").get<int>();
        entry.utterance_id = doc.at("utterance_id").get<std::string>();
        entry.action = doc.at("action").get<std::string>();
        entry.similarity = doc.at("similarity").get<double>();
        entry.outlier_rank = doc.at("outlier_rank").get<int>();
        audit.push_back(std::move(entry));
    }
    return audit;
}

}  // namespace mm
