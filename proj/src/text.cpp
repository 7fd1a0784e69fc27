#include "courtpipe/text.hpp"

#include <cctype>
#include <limits>
#include <unordered_map>

namespace courtpipe::text {

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
           (cp >= 0x3400 && cp <= 0x4DBF) ||    // extension A
           (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
           (cp >= 0x20000 && cp <= 0x2A6DF);    // extension B
}

char32_t decode_utf8(std::string_view s, std::size_t& pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + len > s.size()) {
        ++pos;
        return 0xFFFD;
    }
    for (int i = 1; i < len; ++i) {
        unsigned char bi = byte(pos + i);
        if ((bi & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (bi & 0x3F);
    }
    pos += len;
    return cp;
}

std::int64_t utf8_length(std::string_view s) {
    std::int64_t n = 0;
    std::size_t pos = 0;
    while (pos < s.size()) {
        decode_utf8(s, pos);
        ++n;
    }
    return n;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // swallow leading whitespace
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> toks;
    std::string cur;
    const auto flush = [&] {
        if (!cur.empty()) {
            toks.push_back(cur);
            cur.clear();
        }
    };
    std::size_t pos = 0;
    while (pos < s.size()) {
        unsigned char b = static_cast<unsigned char>(s[pos]);
        if (b < 0x80) {
            char c = static_cast<char>(b);
            if (std::isalnum(b)) {
                cur.push_back(static_cast<char>(std::tolower(b)));
            } else if (c == ',' && !cur.empty() &&
                       std::isdigit(static_cast<unsigned char>(cur.back())) &&
                       pos + 1 < s.size() &&
                       std::isdigit(static_cast<unsigned char>(s[pos + 1]))) {
                cur.push_back(',');  // thousands separator inside a digit group
            } else {
                flush();
            }
            ++pos;
            continue;
        }
        std::size_t start = pos;
        char32_t cp = decode_utf8(s, pos);
        flush();
        if (is_cjk(cp) || cp == U'元' || cp == U'￥' || cp == 0xA5 /* ¥ */) {
            toks.emplace_back(s.substr(start, pos - start));
        }
    }
    flush();
    return toks;
}

namespace {

const std::unordered_map<std::string, long long>& unit_words() {
    static const std::unordered_map<std::string, long long> kUnits = {
        {"zero", 0},     {"one", 1},       {"two", 2},       {"three", 3},
        {"four", 4},     {"five", 5},      {"six", 6},       {"seven", 7},
        {"eight", 8},    {"nine", 9},      {"ten", 10},      {"eleven", 11},
        {"twelve", 12},  {"thirteen", 13}, {"fourteen", 14}, {"fifteen", 15},
        {"sixteen", 16}, {"seventeen", 17},{"eighteen", 18}, {"nineteen", 19},
        {"twenty", 20},  {"thirty", 30},   {"forty", 40},    {"fifty", 50},
        {"sixty", 60},   {"seventy", 70},  {"eighty", 80},   {"ninety", 90},
    };
    return kUnits;
}

const std::unordered_map<std::string, long long>& scale_words() {
    static const std::unordered_map<std::string, long long> kScales = {
        {"hundred", 100}, {"thousand", 1000}, {"million", 1000000},
    };
    return kScales;
}

std::optional<long long> digits_value(const std::string& tok) {
    long long v = 0;
    bool any = false;
    for (char c : tok) {
        if (c == ',') continue;
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        if (v > (std::numeric_limits<long long>::max() - 9) / 10) return std::nullopt;
        v = v * 10 + (c - '0');
        any = true;
    }
    if (!any) return std::nullopt;
    return v;
}

}  // namespace

bool is_number_token(const std::string& tok) {
    if (digits_value(tok)) return true;
    return unit_words().count(tok) > 0 || scale_words().count(tok) > 0;
}

std::optional<long long> parse_number_tokens(const std::vector<std::string>& toks,
                                             std::size_t begin, std::size_t end) {
    if (begin >= end || end > toks.size()) return std::nullopt;
    long long total = 0;
    long long current = 0;
    bool any = false;
    for (std::size_t i = begin; i < end; ++i) {
        const std::string& t = toks[i];
        if (auto d = digits_value(t)) {
            current += *d;
            any = true;
            continue;
        }
        if (auto it = unit_words().find(t); it != unit_words().end()) {
            current += it->second;
            any = true;
            continue;
        }
        if (auto it = scale_words().find(t); it != scale_words().end()) {
            long long base = current == 0 ? 1 : current;
            if (it->second == 100) {
                current = base * 100;
            } else {
                total += base * it->second;
                current = 0;
            }
            any = true;
            continue;
        }
        return std::nullopt;
    }
    if (!any) return std::nullopt;
    return total + current;
}

}  // namespace courtpipe::text
