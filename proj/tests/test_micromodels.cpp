#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mm/errors.hpp"
#include "mm/micromodel.hpp"
#include "mm/svm.hpp"
#include "mm/text.hpp"
#include "support/fixtures.hpp"

using namespace mm;

namespace {

Instance make_instance(const std::string& id, const std::vector<std::string>& texts) {
    Instance inst;
    inst.id = id;
    for (const auto& text : texts) {
        Utterance utt;
        utt.id = id + "_s" + std::to_string(inst.utterances.size());
        utt.text = text;
        utt.index = inst.utterances.size();
        inst.utterances.push_back(std::move(utt));
    }
    return inst;
}

Corpus make_corpus(const std::string& id, const std::vector<std::string>& texts) {
    Corpus corpus;
    corpus.id = id;
    for (const auto& text : texts) {
        Utterance utt;
        utt.id = id + std::to_string(corpus.utterances.size());
        utt.text = text;
        utt.index = corpus.utterances.size();
        corpus.utterances.push_back(std::move(utt));
    }
    return corpus;
}

}  // namespace

TEST_CASE("keyword-logic matches contiguous token n-grams") {
    KeywordLogicModel model("kw", std::vector<std::string>{"panic attack"});
    CHECK(model.hit("had a Panic Attack today") == 1);
    CHECK(model.hit("panic in the attack room") == 0);  // not contiguous
    CHECK(model.hit("") == 0);

    KeywordLogicModel ptsd("kw2", std::vector<std::string>{"ptsd"});
    CHECK(ptsd.hit("posttraumatic stress") == 0);

    KeywordLogicModel sad("kw3", std::vector<std::string>{"sad"});
    CHECK(sad.hit("the saddle was heavy") == 0);  // token match, not substring

    CHECK_THROWS_AS(KeywordLogicModel("bad", std::vector<std::string>{}), ConfigError);
    CHECK_THROWS_AS(KeywordLogicModel("bad", std::vector<std::string>{"..."}), ConfigError);
}

TEST_CASE("lexicon-logic matches literals and wildcard prefixes") {
    fixtures::TempDir dir("mm");
    const Lexicon lex = fixtures::fixture_lexicon(dir);
    LexiconLogicModel model("sadness", lex, "sadness");
    CHECK(model.hit("feeling hopelessness") == 1);  // hopeless* prefix
    CHECK(model.hit("so unhappy") == 0);            // "happy" is joy, and token is "unhappy"
    CHECK(model.hit("") == 0);

    LexiconLogicModel joy("joy", lex, "joy");
    CHECK(joy.hit("so unhappy today") == 0);
    CHECK(joy.hit("so happy today") == 1);

    CHECK_THROWS_AS(LexiconLogicModel("x", lex, "no-such-category"), ConfigError);
}

TEST_CASE("svm micromodel training") {
    const Corpus positives = make_corpus("p", {"alpha one", "alpha two", "alpha three and four",
                                               "more alpha here", "alpha again", "alpha alpha"});
    const Corpus negatives = make_corpus("n", {"beta one", "beta two", "beta three and four",
                                               "more beta here", "beta again", "beta beta"});

    SUBCASE("separable corpora are fit perfectly") {
        const LinearSvm svm = train_linear_svm(positives, negatives);
        for (const auto& utt : positives.utterances) CHECK(svm.predict(utt.text) == 1);
        for (const auto& utt : negatives.utterances) CHECK(svm.predict(utt.text) == 0);
    }

    SUBCASE("out-of-vocabulary text has margin 0 and predicts 0") {
        const LinearSvm svm = train_linear_svm(positives, negatives);
        CHECK(svm.margin("zzz qqq") == 0.0);
        CHECK(svm.predict("zzz qqq") == 0);
    }

    SUBCASE("equal seeds give bit-identical weights") {
        const LinearSvm a = train_linear_svm(positives, negatives);
        const LinearSvm b = train_linear_svm(positives, negatives);
        CHECK(a.vocabulary == b.vocabulary);
        CHECK(a.weights == b.weights);
    }

    SUBCASE("duplicate utterance across classes trains without error") {
        Corpus pos2 = positives;
        Corpus neg2 = negatives;
        pos2.utterances.push_back({"d1", "shared text", pos2.size()});
        neg2.utterances.push_back({"d2", "shared text", neg2.size()});
        CHECK_NOTHROW(train_linear_svm(pos2, neg2));
    }

    SUBCASE("empty corpus is a configuration error") {
        CHECK_THROWS_AS(train_linear_svm(Corpus{}, negatives), ConfigError);
        CHECK_THROWS_AS(train_linear_svm(positives, Corpus{}), ConfigError);
    }
}

TEST_CASE("similarity-query micromodel") {
    auto provider = std::make_shared<FallbackEmbedder>();
    const Corpus examples =
        make_corpus("ex", {"i can't focus at all", "everything feels pointless lately"});

    SUBCASE("exact duplicate hits with similarity 1.0 at any threshold <= 1") {
        for (double threshold : {0.5, 0.85, 1.0}) {
            SimilarityQueryModel model("sq", examples, threshold, provider);
            const auto [bit, score] = model.hit_scored("i can't focus at all");
            CHECK(bit == 1);
            CHECK(score == 1.0);
        }
    }

    SUBCASE("planted near-duplicate clears 0.85") {
        SimilarityQueryModel model("sq", examples, 0.85, provider);
        const auto [bit, score] = model.hit_scored("i cant focus at all");
        CHECK(score >= 0.85);
        CHECK(bit == 1);
    }

    SUBCASE("unrelated text misses") {
        SimilarityQueryModel model("sq", examples, 0.85, provider);
        CHECK(model.hit("the wagon unloaded gravel near the dock") == 0);
    }

    SUBCASE("lowering the threshold never turns a hit into a miss") {
        std::mt19937_64 eng(21);
        std::vector<std::string> texts;
        for (int i = 0; i < 30; ++i) texts.push_back(fixtures::filler_sentence(eng));
        texts.push_back("i cant focus at all");
        texts.push_back("i can't focus at all");

        std::vector<double> thresholds = {1.0, 0.9, 0.8, 0.5, 0.2, 0.05};
        std::vector<std::vector<int>> bits_at;
        for (double threshold : thresholds) {
            SimilarityQueryModel model("sq", examples, threshold, provider);
            std::vector<int> bits;
            for (const auto& text : texts) bits.push_back(model.hit(text));
            bits_at.push_back(std::move(bits));
        }
        for (std::size_t t = 1; t < thresholds.size(); ++t) {
            for (std::size_t i = 0; i < texts.size(); ++i) {
                CHECK(bits_at[t][i] >= bits_at[t - 1][i]);
            }
        }
    }

    SUBCASE("orthogonal embeddings give (0, 0.0)") {
        // stub provider: every distinct text gets its own basis vector
        struct BasisProvider final : EmbeddingProvider {
            std::size_t dimension() const override { return 16; }
            std::vector<double> embed(const std::string& text) const override {
                std::vector<double> v(16, 0.0);
                v[fnv1a64(text) % 16] = 1.0;
                return v;
            }
            std::string fingerprint() const override { return "basis:16"; }
        };
        auto basis = std::make_shared<BasisProvider>();
        Corpus ex;
        ex.id = "ex";
        ex.utterances.push_back({"e0", "aaa", 0});
        SimilarityQueryModel model("sq", ex, 0.85, basis);
        const auto [bit, score] = model.hit_scored("bbb");  // hashes to a different basis axis
        CHECK(bit == 0);
        CHECK(score == 0.0);
    }

    SUBCASE("empty example corpus is a build-time configuration error") {
        CHECK_THROWS_AS(SimilarityQueryModel("sq", Corpus{}, 0.85, provider), ConfigError);
    }

    SUBCASE("threshold outside (0,1] is rejected") {
        CHECK_THROWS_AS(SimilarityQueryModel("sq", examples, 0.0, provider), ConfigError);
        CHECK_THROWS_AS(SimilarityQueryModel("sq", examples, 1.5, provider), ConfigError);
    }
}

TEST_CASE("run produces hit vectors of length k with scores for scored kinds") {
    auto provider = std::make_shared<FallbackEmbedder>();
    const Corpus examples = make_corpus("ex", {"i feel sad"});
    const Instance instance = make_instance("i1", {"I feel sad", "fine today", "all good"});

    KeywordLogicModel keyword("kw", std::vector<std::string>{"sad"});
    const HitVector kw_hits = keyword.run(instance);
    CHECK(kw_hits.bits == std::vector<std::uint8_t>{1, 0, 0});
    CHECK_FALSE(kw_hits.has_scores());
    CHECK(kw_hits.instance == "i1");
    CHECK(kw_hits.micromodel == "kw");

    SimilarityQueryModel similarity("sq", examples, 0.85, provider);
    const HitVector sq_hits = similarity.run(instance);
    REQUIRE(sq_hits.bits.size() == 3);
    REQUIRE(sq_hits.scores.size() == 3);
    CHECK(sq_hits.bits[0] == 1);
    CHECK(sq_hits.scores[0] == 1.0);

    // purity: repeated runs agree bit-for-bit
    const HitVector again = similarity.run(instance);
    CHECK(again.bits == sq_hits.bits);
    CHECK(again.scores == sq_hits.scores);
}

TEST_CASE("registry: serialization round-trip, fingerprint, freeze") {
    fixtures::TempDir dir("reg");
    auto provider = std::make_shared<FallbackEmbedder>();
    const Lexicon lex = fixtures::fixture_lexicon(dir);

    MicromodelRegistry registry;
    registry.add(std::make_unique<KeywordLogicModel>(
        "kw", std::vector<std::string>{"panic attack", "hopeless"}));
    registry.add(std::make_unique<LexiconLogicModel>("lex", lex, "sadness"));
    registry.add(std::make_unique<LinearSvmModel>(
        "svm", train_linear_svm(make_corpus("p", {"alpha one", "alpha two", "alpha three"}),
                                make_corpus("n", {"beta one", "beta two", "beta three"}))));
    registry.add(std::make_unique<SimilarityQueryModel>(
        "sq", make_corpus("ex", {"i can't focus at all"}), 0.85, provider));

    CHECK(registry.find("kw") != nullptr);
    CHECK(registry.find("nope") == nullptr);
    CHECK_THROWS_AS(
        registry.add(std::make_unique<KeywordLogicModel>("kw", std::vector<std::string>{"x"})),
        ConfigError);

    const std::string fp = registry.fingerprint();
    const auto reg_dir = dir.file("micromodels");
    registry.save(reg_dir);

    const MicromodelRegistry loaded = MicromodelRegistry::load(reg_dir, provider);
    REQUIRE(loaded.size() == registry.size());
    CHECK(loaded.fingerprint() == fp);
    CHECK(MicromodelRegistry::fingerprint_on_disk(reg_dir) ==
          MicromodelRegistry::fingerprint_on_disk(reg_dir));

    // loaded models behave identically; every kind emits exactly k bits
    std::mt19937_64 eng(14);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::string> texts;
        const std::size_t k = 1 + eng() % 7;
        for (std::size_t j = 0; j < k; ++j) {
            texts.push_back(eng() % 2 ? fixtures::filler_sentence(eng)
                                      : fixtures::signal_sentence(eng));
        }
        const Instance instance = make_instance("i" + std::to_string(trial), texts);
        for (std::size_t m = 0; m < registry.size(); ++m) {
            const auto a = registry.at(m).run(instance);
            const auto b = loaded.at(m).run(instance);
            CHECK(a.bits.size() == k);
            CHECK(a.bits == b.bits);
            CHECK(a.scores == b.scores);
            if (registry.at(m).scored()) CHECK(a.scores.size() == k);
        }
    }

    // saving the loaded registry reproduces the exact same bytes
    const auto reg_dir2 = dir.file("micromodels2");
    loaded.save(reg_dir2);
    CHECK(MicromodelRegistry::fingerprint_on_disk(reg_dir) ==
          MicromodelRegistry::fingerprint_on_disk(reg_dir2));

    CHECK_THROWS_AS(MicromodelRegistry::load(dir.file("missing"), provider), MissingArtifactError);
}
