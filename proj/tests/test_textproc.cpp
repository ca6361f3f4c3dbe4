#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "circamood/textproc.hpp"

using namespace circamood;
using Tokens = std::vector<std::string>;

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, StripsUrlsMentionsAndHashMarks) {
    EXPECT_EQ(tokenize("I'm so HAPPY today! http://t.co/x @bob #joy"),
              (Tokens{"i", "m", "so", "happy", "today", "joy"}));
}

TEST(Tokenize, SplitsOnPunctuation) { EXPECT_EQ(tokenize("rain, rain..."), (Tokens{"rain", "rain"})); }

TEST(Tokenize, HttpsUrlRunsToWhitespace) {
    EXPECT_EQ(tokenize("see https://example.com/a-b?c=d now"), (Tokens{"see", "now"}));
}

TEST(Tokenize, MentionStopsAtNonWordCharacter) {
    EXPECT_EQ(tokenize("hi @bob_smith99, bye"), (Tokens{"hi", "bye"}));
}

TEST(Tokenize, NonLatinTextYieldsNothing) {
    EXPECT_TRUE(tokenize("\xd0\xbf\xd1\x80\xd0\xb8\xd0\xb2\xd0\xb5\xd1\x82").empty());
    EXPECT_EQ(tokenize("caf\xc3\xa9"), (Tokens{"caf"}));
}

TEST(Tokenize, SingleLettersAndDigits) { EXPECT_EQ(tokenize("a1b 22 c"), (Tokens{"a", "b", "c"})); }

TEST(Tokenize, IdempotentOnJoinedOutput) {
    std::mt19937 gen(11);
    const std::string alphabet = "abcXYZ @#:/.,'!h ttps";
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const auto len = gen() % 60;
        for (std::size_t i = 0; i < len; ++i) {
            text.push_back(alphabet[gen() % alphabet.size()]);
        }
        const auto once = tokenize(text);
        std::string joined;
        for (const auto& t : once) {
            joined += t + " ";
            for (const char c : t) {
                ASSERT_TRUE(c >= 'a' && c <= 'z') << text;
            }
            ASSERT_FALSE(t.empty());
        }
        ASSERT_EQ(tokenize(joined), once) << text;
    }
}

TEST(PorterStem, HappyAndHappiness) {
    EXPECT_EQ(porter_stem("happy"), "happi");
    EXPECT_EQ(porter_stem("happiness"), "happi");
}

TEST(PorterStem, ClassicExamples) {
    EXPECT_EQ(porter_stem("caresses"), "caress");
    EXPECT_EQ(porter_stem("ponies"), "poni");
    EXPECT_EQ(porter_stem("relational"), "relat");
    EXPECT_EQ(porter_stem("generalizations"), "gener");
    EXPECT_EQ(porter_stem("hopping"), "hop");
    EXPECT_EQ(porter_stem("filing"), "file");
    EXPECT_EQ(porter_stem("controll"), "control");
    EXPECT_EQ(porter_stem("is"), "is");
}

TEST(PorterStem, ReferenceVocabulary) {
    std::ifstream voc(CIRCAMOOD_FIXTURES "/porter_voc.txt");
    std::ifstream expected(CIRCAMOOD_FIXTURES "/porter_output.txt");
    ASSERT_TRUE(voc && expected);
    std::string word;
    std::string stem;
    std::size_t checked = 0;
    std::size_t mismatches = 0;
    while (std::getline(voc, word) && std::getline(expected, stem)) {
        if (word.empty()) {
            continue;
        }
        ++checked;
        if (porter_stem(word) != stem) {
            ++mismatches;
            ADD_FAILURE() << word << " -> " << porter_stem(word) << " expected " << stem;
        }
    }
    EXPECT_EQ(checked, 23531U);
    EXPECT_EQ(mismatches, 0U);
}

TEST(PorterStem, OutputIsLowercaseAndNoLonger) {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 20000; ++trial) {
        std::string w;
        const auto len = 1 + gen() % 14;
        for (std::size_t i = 0; i < len; ++i) {
            w.push_back(static_cast<char>('a' + gen() % 26));
        }
        const auto s = porter_stem(w);
        ASSERT_LE(s.size(), w.size()) << w;
        for (const char c : s) {
            ASSERT_TRUE(c >= 'a' && c <= 'z') << w;
        }
    }
}
