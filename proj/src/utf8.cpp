#include "intentgan/utf8.hpp"

namespace intentgan::utf8 {

bool decode(std::string_view text, std::vector<char32_t>& out) {
    out.clear();
    out.reserve(text.size());
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto b0 = static_cast<unsigned char>(text[i]);
        char32_t cp = 0;
        std::size_t len = 0;
        char32_t min = 0;
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
            min = 0x80;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
            min = 0x800;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
            min = 0x10000;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(text[i + k]);
            if ((b & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (b & 0x3F);
        }
        if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        out.push_back(cp);
        i += len;
    }
    return true;
}

bool is_valid(std::string_view text) {
    std::vector<char32_t> tmp;
    return decode(text, tmp);
}

void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode(const std::vector<char32_t>& cps, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) append(out, cps[i]);
    return out;
}

bool is_space(char32_t cp) noexcept {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

namespace {

std::vector<char32_t> scalars_or_bytes(std::string_view text) {
    std::vector<char32_t> cps;
    if (!decode(text, cps)) {
        cps.clear();
        for (char c : text) cps.push_back(static_cast<unsigned char>(c));
    }
    return cps;
}

}  // namespace

std::vector<std::string> split_whitespace(std::string_view text) {
    const auto cps = scalars_or_bytes(text);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < cps.size()) {
        while (i < cps.size() && is_space(cps[i])) ++i;
        const std::size_t start = i;
        while (i < cps.size() && !is_space(cps[i])) ++i;
        if (i > start) tokens.push_back(encode(cps, start, i));
    }
    return tokens;
}

std::size_t count_tokens(std::string_view text) {
    const auto cps = scalars_or_bytes(text);
    std::size_t count = 0;
    bool in_token = false;
    for (char32_t cp : cps) {
        const bool space = is_space(cp);
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

std::size_t count_scalars(std::string_view text) {
    return scalars_or_bytes(text).size();
}

}  // namespace intentgan::utf8
