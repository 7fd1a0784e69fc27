#include "courtpipe/articles.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "courtpipe/text.hpp"

namespace courtpipe {

namespace {

std::string strip_outer_punct(std::string s) {
    const std::string punct = ".,;:!?\"'";
    std::size_t b = 0, e = s.size();
    while (b < e && punct.find(s[b]) != std::string::npos) ++b;
    while (e > b && punct.find(s[e - 1]) != std::string::npos) --e;
    return s.substr(b, e - b);
}

std::string drop_leading_the(const std::string& s) {
    if (s.size() > 4) {
        std::string head = text::to_lower_ascii(s.substr(0, 4));
        if (head == "the ") return s.substr(4);
    }
    return s;
}

std::string title_key(const std::string& cleaned) {
    return text::to_lower_ascii(drop_leading_the(cleaned));
}

void add_title(LawTitleTable& t, const std::string& full, const std::string& canonical) {
    t[title_key(full)] = canonical;
    t[title_key(canonical)] = canonical;
}

}  // namespace

const LawTitleTable& default_law_titles() {
    static const LawTitleTable kTable = [] {
        LawTitleTable t;
        add_title(t, "Criminal Law of the People's Republic of China",
                  "Criminal Law of the PRC");
        add_title(t, "Criminal Procedure Law of the People's Republic of China",
                  "Criminal Procedure Law of the PRC");
        return t;
    }();
    return kTable;
}

std::string normalize_law_title(std::string_view raw, const LawTitleTable& table) {
    std::string s(raw);
    // Remove CJK quoting brackets wherever they appear.
    for (const char* bracket : {"《", "》", "“", "”"}) {
        std::size_t pos;
        while ((pos = s.find(bracket)) != std::string::npos) s.erase(pos, 3);
    }
    s = strip_outer_punct(text::collapse_whitespace(s));
    s = drop_leading_the(s);
    if (s.empty()) return s;
    auto it = table.find(title_key(s));
    if (it != table.end()) return it->second;
    return s;
}

namespace {

// "Paragraph P of Article N of the TITLE" | "Article N[, Paragraph P] of the
// TITLE"; "Section" is an accepted alias for "Paragraph".
const std::regex& citation_pattern() {
    static const std::regex kRe(
        R"((?:(?:paragraph|section)\s+(\d{1,4})\s+of\s+)?articles?\s+(\d{1,4})\s*)"
        R"((?:,?\s*(?:paragraph|section)\s+(\d{1,4}))?\s+of\s+(?:the\s+)?)"
        R"(((?:(?!articles?\s)[^;,.()\n])+))",
        std::regex::icase);
    return kRe;
}

const std::regex& loose_candidate_pattern() {
    static const std::regex kRe(R"(articles?\s+\d{1,4})", std::regex::icase);
    return kRe;
}

// CJK title boundary characters that the ASCII character class above cannot
// express; an English-pattern title is cut at the first of these.
std::string cut_at_cjk_delimiters(std::string title) {
    for (const char* delim : {"。", "，", "；", "《", "（"}) {
        if (auto pos = title.find(delim); pos != std::string::npos) {
            title.resize(pos);
        }
    }
    return title;
}

struct PositionedRef {
    std::size_t pos;
    LegalArticleRef ref;
};

// 《TITLE》第N条[第P款], Arabic digits. Hand-scanned because std::regex
// character classes operate on bytes.
void scan_cjk_citations(std::string_view s, const LawTitleTable& table,
                        std::vector<PositionedRef>& out, int& candidates) {
    static const std::string kOpen = "《", kClose = "》";
    static const std::string kDi = "第", kTiao = "条", kKuan = "款";

    const auto read_number = [&](std::size_t& p) -> std::optional<int> {
        std::size_t start = p;
        int v = 0;
        while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p])) &&
               p - start < 5) {
            v = v * 10 + (s[p] - '0');
            ++p;
        }
        if (p == start) return std::nullopt;
        return v;
    };
    const auto skip_marker = [&](std::size_t& p, const std::string& m) {
        if (s.compare(p, m.size(), m) == 0) {
            p += m.size();
            return true;
        }
        return false;
    };

    std::size_t pos = 0;
    while ((pos = s.find(kOpen, pos)) != std::string::npos) {
        std::size_t close = s.find(kClose, pos + kOpen.size());
        if (close == std::string::npos) break;
        std::string title(s.substr(pos + kOpen.size(), close - pos - kOpen.size()));
        std::size_t p = close + kClose.size();
        std::size_t anchor = pos;
        pos = p;
        if (!skip_marker(p, kDi)) continue;
        ++candidates;
        auto article = read_number(p);
        if (!article || !skip_marker(p, kTiao)) continue;
        std::optional<int> paragraph;
        std::size_t q = p;
        if (skip_marker(q, kDi)) {
            if (auto para = read_number(q); para && skip_marker(q, kKuan)) {
                paragraph = para;
            }
        }
        std::string law = normalize_law_title(title, table);
        if (law.empty() || *article < 1) continue;
        out.push_back({anchor, LegalArticleRef{law, *article, paragraph}});
    }
}

}  // namespace

std::vector<LegalArticleRef> parse_article_citations(std::string_view text_in,
                                                     CitationDiagnostics* diag,
                                                     const LawTitleTable& table) {
    std::string s(text_in);
    std::vector<PositionedRef> found;
    int candidates = 0;

    for (auto it = std::sregex_iterator(s.begin(), s.end(), loose_candidate_pattern());
         it != std::sregex_iterator(); ++it) {
        ++candidates;
    }

    for (auto it = std::sregex_iterator(s.begin(), s.end(), citation_pattern());
         it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        int article = std::stoi(m[2].str());
        std::optional<int> paragraph;
        if (m[1].matched) paragraph = std::stoi(m[1].str());
        if (m[3].matched) paragraph = std::stoi(m[3].str());
        std::string law =
            normalize_law_title(cut_at_cjk_delimiters(m[4].str()), table);
        if (law.empty() || article < 1 || (paragraph && *paragraph < 1)) continue;
        found.push_back({static_cast<std::size_t>(m.position(0)),
                         LegalArticleRef{std::move(law), article, paragraph}});
    }

    scan_cjk_citations(s, table, found, candidates);

    std::stable_sort(found.begin(), found.end(),
                     [](const PositionedRef& a, const PositionedRef& b) {
                         return a.pos < b.pos;
                     });

    std::vector<LegalArticleRef> refs;
    refs.reserve(found.size());
    for (auto& f : found) refs.push_back(std::move(f.ref));
    refs = dedupe_articles(std::move(refs));

    if (diag) {
        diag->candidates += candidates;
        diag->parsed += static_cast<int>(found.size());
    }
    return refs;
}

std::string to_citation_string(const LegalArticleRef& ref) {
    std::string out = "Article " + std::to_string(ref.article_number);
    if (ref.paragraph) {
        out += ", Paragraph " + std::to_string(*ref.paragraph);
    }
    out += " of the " + ref.law_title;
    return out;
}

std::vector<LegalArticleRef> dedupe_articles(std::vector<LegalArticleRef> refs) {
    std::vector<LegalArticleRef> out;
    std::set<LegalArticleRef> seen;
    out.reserve(refs.size());
    for (auto& r : refs) {
        if (seen.insert(r).second) out.push_back(std::move(r));
    }
    return out;
}

}  // namespace courtpipe
