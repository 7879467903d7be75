// SPDX-License-Identifier: Apache-2.0

#include "medforge/backends/mock.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "medforge/common/digest.hpp"
#include "medforge/common/errors.hpp"
#include "medforge/common/rng.hpp"

namespace medforge::backends {

using nlohmann::json;

namespace {

std::string hex_tag(DetRng& rng) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%08llx", static_cast<unsigned long long>(rng.below(0x100000000ull)));
    return buf;
}

bool contains(const std::string& haystack, const char* needle) {
    return haystack.find(needle) != std::string::npos;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Pulls the candidate department names out of a classification prompt:
/// the "Name: description" lines between "as follows:" and the closing
/// instructions.
std::vector<std::string> parse_department_options(const std::string& prompt) {
    std::vector<std::string> options;
    size_t start = prompt.find("as follows:");
    if (start == std::string::npos) {
        return options;
    }
    std::istringstream lines(prompt.substr(start));
    std::string line;
    std::getline(lines, line);  // consume the "as follows:" line itself
    while (std::getline(lines, line)) {
        std::string t = trim(line);
        if (t.empty()) {
            continue;
        }
        if (t.rfind("If the dialogue", 0) == 0 || t.rfind("Please choose", 0) == 0 ||
            t.rfind("Here is the dialogue", 0) == 0) {
            break;
        }
        size_t colon = t.find(": ");
        if (colon == std::string::npos || colon == 0) {
            continue;
        }
        options.push_back(t.substr(0, colon));
    }
    return options;
}

std::string mock_question_json(DetRng& rng) {
    std::string t1 = hex_tag(rng);
    std::string t2 = hex_tag(rng);
    json out{{"question1", "What are the key clinical considerations surrounding topic " + t1 +
                               " discussed in the material?"},
             {"question2", "How should the evidence on topic " + t2 +
                               " change day-to-day management decisions?"}};
    return out.dump();
}

std::string mock_score_json(DetRng& rng) {
    int quality = static_cast<int>(rng.below(10)) + 1;
    int difficulty = static_cast<int>(rng.below(10)) + 1;
    int relevance = static_cast<int>(rng.below(6)) + 1;
    bool details = rng.coin();
    // String-typed booleans on purpose: the scoring rubric's output format
    // uses "True"/"False" and the parser must tolerate both styles.
    json out{{"quality", quality},
             {"difficulty", difficulty},
             {"Relevance2Medicine", relevance},
             {"MentionSpecificDetails", details ? "True" : "False"}};
    return out.dump();
}

std::string mock_answers_json(DetRng& rng) {
    std::string t1 = hex_tag(rng);
    std::string t2 = hex_tag(rng);
    json out{{"answer1", "A concise clinical overview (ref " + t1 +
                             "): the main factors, their interactions, and the recommended course."},
             {"answer2", "Point-by-point explanation (ref " + t2 +
                             "): 1. background 2. mechanism 3. practical guidance."}};
    return out.dump();
}

std::string mock_reasoning_text(DetRng& rng) {
    std::string t1 = hex_tag(rng);
    std::string t2 = hex_tag(rng);
    std::ostringstream out;
    out << "Thought: Working through the question step by step (trace " << t1
        << "). First, restate what is being asked and collect the relevant facts from the text. "
           "Second, weigh the alternatives and check them against the stated evidence. "
           "Re-evaluating the earlier step shows the initial reading holds.\n\n"
        << "Summarization: Based on the reasoning above, the final answer (ref " << t2
        << ") is the option best supported by the text.";
    return out.str();
}

std::string mock_classification_reply(const std::string& prompt, DetRng& rng) {
    std::vector<std::string> options = parse_department_options(prompt);
    if (options.empty()) {
        return "None";
    }
    bool none_allowed = contains(prompt, "please output 'None'");
    if (none_allowed && rng.below(8) == 0) {
        return "None";
    }
    return options[static_cast<size_t>(rng.below(options.size()))];
}

}  // namespace

ChatResponse MockChatBackend::complete(const ChatRequest& req) {
    if (req.user_prompt.empty()) {
        throw Error("chat request: user_prompt must be non-empty");
    }
    if (req.max_tokens < 1) {
        throw Error("chat request: max_tokens must be >= 1");
    }
    if (req.temperature < 0.0 || req.temperature > 2.0) {
        throw Error("chat request: temperature must lie in [0, 2]");
    }
    DetRng rng(derive_seed(seed_, "mock.chat:" + chat_request_digest(req)));

    const std::string& p = req.user_prompt;
    std::string text;
    if (contains(p, "generate two questions") && contains(p, "\"question1\"")) {
        text = mock_question_json(rng);
    } else if (contains(p, "Please evaluate the following query")) {
        text = mock_score_json(rng);
    } else if (contains(p, "two different styles of answers") && contains(p, "\"answer1\"")) {
        text = mock_answers_json(rng);
    } else if (contains(p, "Thought and Summarization")) {
        text = mock_reasoning_text(rng);
    } else if (contains(p, "classify a dialogue")) {
        text = mock_classification_reply(p, rng);
    } else {
        text = "mock-reply " + hex_tag(rng);
    }

    ChatResponse resp;
    resp.text = std::move(text);
    resp.prompt_tokens = static_cast<std::int64_t>(req.user_prompt.size() / 4 + 1);
    resp.completion_tokens = static_cast<std::int64_t>(resp.text.size() / 4 + 1);
    resp.latency_ms = 0;
    return resp;
}

std::vector<EmbeddingVector> MockEmbedBackend::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw Error("embed: texts must be non-empty");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (text.empty()) {
            throw Error("embed: each text must be non-empty");
        }
        DetRng rng(derive_seed(seed_, "mock.embed:" + model_id_ + ":" + text));
        EmbeddingVector vec;
        vec.values.resize(static_cast<size_t>(dim_));
        double norm_sq = 0.0;
        for (auto& v : vec.values) {
            v = rng.unit_double() * 2.0 - 1.0;
            norm_sq += v * v;
        }
        double norm = std::sqrt(norm_sq);
        // A zero draw across every component is not reachable in practice;
        // guard anyway so the unit-norm contract cannot be violated.
        if (norm == 0.0) {
            vec.values[0] = 1.0;
            norm = 1.0;
        }
        for (auto& v : vec.values) {
            v /= norm;
        }
        out.push_back(std::move(vec));
    }
    return out;
}

RewardScore MockRewardBackend::score(const std::string& prompt, const std::string& response) {
    if (prompt.empty() || response.empty()) {
        throw Error("reward: prompt and response must be non-empty");
    }
    DetRng rng(derive_seed(seed_, "mock.reward:" + sha256_hex(prompt) + ":" + sha256_hex(response)));
    return RewardScore{rng.unit_double()};
}

TrainerSession MockTrainerBackend::train(const TrainerJobSpec& spec, TrainerSession session) {
    if (spec.samples.empty()) {
        throw Error("trainer: job spec must contain samples");
    }
    if (session.state != SessionState::clean) {
        throw IllegalState("trainer: train requires a clean session");
    }
    std::lock_guard<std::mutex> lock(mutex_);
    calls_.push_back("train");
    last_samples_digest_ = trainer_train_digest(spec);
    audits_.push_back(TrainAudit{last_samples_digest_, spec.hyperparams});
    session.state = SessionState::adapted;
    return session;
}

std::string MockTrainerBackend::generate(const TrainerSession& session, const std::string& prompt) {
    std::lock_guard<std::mutex> lock(mutex_);
    calls_.push_back("generate");
    if (mode_ == MockTrainerMode::oracle) {
        if (session.state != SessionState::adapted) {
            return "unsure.";
        }
        // The few-shot prompt ends with the target question; find its stem.
        size_t q = prompt.rfind("Question: ");
        if (q == std::string::npos) {
            return "unsure.";
        }
        size_t stem_begin = q + std::string("Question: ").size();
        size_t stem_end = prompt.find("\nOptions:", stem_begin);
        std::string stem = trim(prompt.substr(
            stem_begin, stem_end == std::string::npos ? std::string::npos : stem_end - stem_begin));
        auto it = answer_key_.find(stem);
        if (it == answer_key_.end()) {
            return "unsure.";
        }
        return "Answer: " + it->second;
    }
    DetRng rng(derive_seed(seed_, "mock.trainer:" + trainer_generate_digest(session, prompt)));
    std::ostringstream out;
    out << "[trainer state=" << session_state_name(session.state);
    if (session.state == SessionState::adapted && !last_samples_digest_.empty()) {
        out << " data=" << last_samples_digest_.substr(0, 8);
    }
    out << "] reply " << hex_tag(rng);
    return out.str();
}

TrainerSession MockTrainerBackend::restore(TrainerSession session) {
    std::lock_guard<std::mutex> lock(mutex_);
    calls_.push_back("restore");
    session.state = SessionState::clean;
    return session;
}

void MockTrainerBackend::set_answer_key(std::map<std::string, std::string> key) {
    std::lock_guard<std::mutex> lock(mutex_);
    answer_key_ = std::move(key);
}

std::vector<std::string> MockTrainerBackend::call_log() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

std::vector<MockTrainerBackend::TrainAudit> MockTrainerBackend::train_audits() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return audits_;
}

}  // namespace medforge::backends
