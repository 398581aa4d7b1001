/// @file text.cpp
/// @brief Text utilities and single-pass template rendering.

#include "mole/text.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>

#include <openssl/evp.h>

#include "mole/error.hpp"
#include "mole/templates.hpp"

namespace mole::text {

namespace {

bool is_word_byte(unsigned char c) {
    if (c >= 0x80) return true;
    return std::isalnum(c) || c == '\'' || c == '_';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!is_terminator(text[i])) continue;
        std::size_t end = i + 1;
        while (end < text.size() && is_terminator(text[end])) ++end;
        if (end == text.size() || is_space(text[end])) {
            auto s = trim(text.substr(start, end - start));
            if (!s.empty()) sentences.emplace_back(s);
            start = end;
        }
        i = end - 1;
    }
    auto tail = trim(text.substr(start));
    if (!tail.empty()) sentences.emplace_back(tail);
    return sentences;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) out.push_back(' ');
        out += s;
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace mole::text

namespace mole::templates {

std::string render(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& slots) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = slots.find(tmpl.substr(i + 1, close - i - 1));
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

}  // namespace mole::templates
