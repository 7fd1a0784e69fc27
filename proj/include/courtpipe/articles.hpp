#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace courtpipe {

/// Canonical citation key for one legal article. Equality is exact equality
/// of all three fields; an absent paragraph is distinct from any present one.
struct LegalArticleRef {
    std::string law_title;  // normalized, see normalize_law_title
    int article_number = 0;
    std::optional<int> paragraph;

    auto operator<=>(const LegalArticleRef&) const = default;
};

/// Maps cleaned, casefolded statute names (leading "the" dropped) to their
/// canonical display form. Canonical forms are self-mapped so normalization
/// is idempotent.
using LawTitleTable = std::map<std::string, std::string>;

/// Default table: the two statutes the shipped fixtures cite, full name and
/// short name both mapping to the short form.
const LawTitleTable& default_law_titles();

/// Strips bracket quoting and stray punctuation, collapses whitespace, drops
/// a leading "the", then applies the abbreviation table. Unknown titles pass
/// through cleaned. Idempotent.
std::string normalize_law_title(std::string_view raw,
                                const LawTitleTable& table = default_law_titles());

struct CitationDiagnostics {
    int candidates = 0;  // spans that looked like a citation
    int parsed = 0;      // spans that produced a ref
    int dropped() const { return candidates > parsed ? candidates - parsed : 0; }
};

/// Extracts article citations from free text, input order preserved,
/// canonical duplicates removed. Unrecognized spans are skipped, never fatal;
/// they are tallied in `diag` when provided.
std::vector<LegalArticleRef> parse_article_citations(
    std::string_view text, CitationDiagnostics* diag = nullptr,
    const LawTitleTable& table = default_law_titles());

/// Canonical display form, e.g. "Article 67, Paragraph 1 of the Criminal Law
/// of the PRC". parse_article_citations maps it back to the same ref.
std::string to_citation_string(const LegalArticleRef& ref);

/// Removes canonical duplicates, keeping first occurrences in order.
std::vector<LegalArticleRef> dedupe_articles(std::vector<LegalArticleRef> refs);

}  // namespace courtpipe
