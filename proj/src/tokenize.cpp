#include "courtpipe/tokenize.hpp"

#include <cctype>

#include "courtpipe/text.hpp"

namespace courtpipe {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string latin;
    std::vector<std::string> cjk_run;

    const auto flush_latin = [&] {
        if (!latin.empty()) {
            out.push_back(latin);
            latin.clear();
        }
    };
    const auto flush_cjk = [&] {
        if (cjk_run.empty()) return;
        for (const auto& c : cjk_run) out.push_back(c);
        for (std::size_t i = 0; i + 1 < cjk_run.size(); ++i) {
            out.push_back(cjk_run[i] + cjk_run[i + 1]);
        }
        cjk_run.clear();
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        unsigned char b = static_cast<unsigned char>(text[pos]);
        if (b < 0x80) {
            if (std::isalnum(b)) {
                flush_cjk();
                latin.push_back(static_cast<char>(std::tolower(b)));
            } else {
                flush_latin();
                flush_cjk();
            }
            ++pos;
            continue;
        }
        std::size_t start = pos;
        char32_t cp = text::decode_utf8(text, pos);
        flush_latin();
        if (text::is_cjk(cp)) {
            cjk_run.emplace_back(text.substr(start, pos - start));
        } else {
            flush_cjk();
        }
    }
    flush_latin();
    flush_cjk();
    return out;
}

}  // namespace courtpipe
