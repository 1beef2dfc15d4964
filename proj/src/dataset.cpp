#include "intentgan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "intentgan/errors.hpp"
#include "intentgan/rng.hpp"
#include "intentgan/utf8.hpp"
#include "json.hpp"

namespace intentgan {

using nlohmann::json;

std::string_view to_string(Split split) noexcept {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "train";
}

std::optional<Split> parse_split(std::string_view name) noexcept {
    if (name == "train") return Split::train;
    if (name == "validation" || name == "val") return Split::validation;
    if (name == "test") return Split::test;
    return std::nullopt;
}

LabelVocab::LabelVocab(std::vector<std::string> names) : names_(std::move(names)) {
    std::set<std::string_view> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) throw DataError("duplicate class name '" + n + "'");
    }
}

std::optional<std::size_t> LabelVocab::index_of(std::string_view name) const noexcept {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

std::vector<std::size_t> DatasetBundle::ids_in(Split split) const {
    std::vector<std::size_t> ids;
    for (const auto& u : utterances) {
        if (u.split == split) ids.push_back(u.id);
    }
    return ids;
}

std::size_t DatasetBundle::count(Split split) const {
    return static_cast<std::size_t>(std::count_if(
        utterances.begin(), utterances.end(), [split](const Utterance& u) { return u.split == split; }));
}

bool same_content(const DatasetBundle& a, const DatasetBundle& b) {
    return a.vocab == b.vocab && a.utterances == b.utterances;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void renumber(std::vector<Utterance>& utterances) {
    for (std::size_t i = 0; i < utterances.size(); ++i) utterances[i].id = i;
}

}  // namespace

DatasetBundle parse_clinc_json(std::string_view json_text, std::string source) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DataError(source + ": " + e.what());
    }
    if (!doc.is_object()) throw DataError(source + ": top level is not a JSON object");

    struct Raw {
        std::string text;
        std::string label;
        Split split;
    };
    std::vector<Raw> raw;
    const std::pair<const char*, Split> keys[] = {
        {"train", Split::train}, {"val", Split::validation}, {"test", Split::test}};
    for (const auto& [key, split] : keys) {
        const auto it = doc.find(key);
        if (it == doc.end()) throw DataError(source + ": missing key \"" + key + "\"");
        if (!it->is_array()) throw DataError(source + ": \"" + key + "\" is not a list");
        std::size_t index = 0;
        for (const auto& entry : *it) {
            const std::string where = source + ": \"" + key + "\" entry " + std::to_string(index);
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
                !entry[1].is_string()) {
                throw DataError(where + " is not a [text, label] pair");
            }
            auto text = entry[0].get<std::string>();
            auto label = entry[1].get<std::string>();
            if (!utf8::is_valid(text) || !utf8::is_valid(label)) {
                throw DataError(where + " is not valid UTF-8");
            }
            raw.push_back({std::move(text), std::move(label), split});
            ++index;
        }
    }

    std::set<std::string> names;
    for (const auto& r : raw) names.insert(r.label);
    DatasetBundle bundle;
    bundle.vocab = LabelVocab(std::vector<std::string>(names.begin(), names.end()));
    bundle.utterances.reserve(raw.size());
    for (auto& r : raw) {
        Utterance u;
        u.id = bundle.utterances.size();
        u.text = std::move(r.text);
        u.label = bundle.vocab.index_of(r.label);
        u.split = r.split;
        bundle.utterances.push_back(std::move(u));
    }
    bundle.provenance = "clinc:" + source;
    return bundle;
}

DatasetBundle load_clinc_json(const std::filesystem::path& path) {
    return parse_clinc_json(read_file(path), path.string());
}

DatasetBundle load_canonical_jsonl(const std::filesystem::path& path,
                                   const std::optional<LabelVocab>& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    struct Raw {
        std::string text;
        std::optional<std::string> label;
        Split split;
    };
    std::vector<Raw> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(where + ": " + e.what());
        }
        if (!obj.is_object()) throw DataError(where + ": not a JSON object");
        const auto text = obj.find("text");
        const auto label = obj.find("label");
        const auto split = obj.find("split");
        if (text == obj.end() || !text->is_string()) throw DataError(where + ": missing string \"text\"");
        if (split == obj.end() || !split->is_string()) throw DataError(where + ": missing string \"split\"");
        const auto parsed_split = parse_split(split->get<std::string>());
        if (!parsed_split || split->get<std::string>() == "val") {
            throw DataError(where + ": split must be train, validation or test");
        }
        Raw r{text->get<std::string>(), std::nullopt, *parsed_split};
        if (label != obj.end() && !label->is_null()) {
            if (!label->is_string()) throw DataError(where + ": \"label\" must be a string or null");
            r.label = label->get<std::string>();
        } else if (r.split != Split::train) {
            throw DataError(where + ": validation/test items must carry a label");
        }
        raw.push_back(std::move(r));
    }

    DatasetBundle bundle;
    if (vocab) {
        bundle.vocab = *vocab;
    } else {
        std::set<std::string> names;
        for (const auto& r : raw) {
            if (r.label) names.insert(*r.label);
        }
        bundle.vocab = LabelVocab(std::vector<std::string>(names.begin(), names.end()));
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        Utterance u;
        u.id = i;
        u.text = std::move(raw[i].text);
        u.split = raw[i].split;
        if (raw[i].label) {
            u.label = bundle.vocab.index_of(*raw[i].label);
            if (!u.label) {
                throw DataError(path.string() + ":" + std::to_string(i + 1) + ": unknown label '" +
                                *raw[i].label + "'");
            }
        }
        bundle.utterances.push_back(std::move(u));
    }
    bundle.provenance = "jsonl:" + path.string();
    return bundle;
}

void save_canonical_jsonl(const DatasetBundle& bundle, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (const auto& u : bundle.utterances) {
        nlohmann::ordered_json obj;
        obj["text"] = u.text;
        obj["label"] = u.label ? json(bundle.vocab.name(*u.label)) : json(nullptr);
        obj["split"] = to_string(u.split);
        out << obj.dump() << '\n';
    }
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

DatasetBundle select_classes(const DatasetBundle& bundle, const std::vector<std::string>& names) {
    std::vector<std::string> unknown;
    std::vector<std::size_t> new_index(bundle.vocab.size(), SIZE_MAX);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto idx = bundle.vocab.index_of(names[i]);
        if (!idx) {
            unknown.push_back(names[i]);
        } else {
            new_index[*idx] = i;
        }
    }
    if (!unknown.empty()) {
        std::string msg = "unknown class name(s):";
        for (const auto& n : unknown) msg += " '" + n + "'";
        throw DataError(msg);
    }

    DatasetBundle out;
    out.vocab = LabelVocab(names);
    for (const auto& u : bundle.utterances) {
        if (!u.label || new_index[*u.label] == SIZE_MAX) continue;
        Utterance copy = u;
        copy.label = new_index[*u.label];
        out.utterances.push_back(std::move(copy));
    }
    renumber(out.utterances);
    out.provenance = bundle.provenance + "; select_classes(" + std::to_string(names.size()) + ")";
    return out;
}

DatasetBundle clean_min_length(const DatasetBundle& bundle, std::size_t min_tokens) {
    if (min_tokens < 1) throw ConfigError("clean_min_length: min_tokens must be >= 1");
    DatasetBundle out;
    out.vocab = bundle.vocab;
    std::map<Split, std::size_t> removed;
    for (const auto& u : bundle.utterances) {
        if (utf8::count_tokens(u.text) < min_tokens) {
            ++removed[u.split];
            continue;
        }
        out.utterances.push_back(u);
    }
    renumber(out.utterances);
    out.provenance = bundle.provenance + "; clean_min_length(" + std::to_string(min_tokens) +
                     "): removed train=" + std::to_string(removed[Split::train]) +
                     " validation=" + std::to_string(removed[Split::validation]) +
                     " test=" + std::to_string(removed[Split::test]);
    return out;
}

SemiSupervisedView mask_labels(const DatasetBundle& bundle, double labeled_fraction,
                               std::uint64_t seed) {
    if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
        throw ConfigError("labeled_fraction must be in (0, 1]");
    }
    std::vector<std::vector<std::size_t>> per_class(bundle.num_classes());
    SemiSupervisedView view;
    for (const auto& u : bundle.utterances) {
        if (u.split != Split::train) continue;
        if (u.label) {
            per_class[*u.label].push_back(u.id);
        } else {
            view.unlabeled_ids.push_back(u.id);
        }
    }
    const Rng root(seed);
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        auto& ids = per_class[c];
        if (ids.empty()) continue;
        const auto wanted = static_cast<std::size_t>(
            std::llround(labeled_fraction * static_cast<double>(ids.size())));
        const std::size_t keep = std::clamp<std::size_t>(wanted, 1, ids.size());
        Rng rng = root.split("mask/" + std::to_string(c));
        rng.shuffle(std::span<std::size_t>(ids));
        view.labeled_ids.insert(view.labeled_ids.end(), ids.begin(), ids.begin() + keep);
        view.unlabeled_ids.insert(view.unlabeled_ids.end(), ids.begin() + keep, ids.end());
    }
    std::sort(view.labeled_ids.begin(), view.labeled_ids.end());
    std::sort(view.unlabeled_ids.begin(), view.unlabeled_ids.end());
    return view;
}

DatasetStats stats(const DatasetBundle& bundle) {
    DatasetStats s;
    if (bundle.utterances.empty()) return s;
    std::unordered_set<std::string> vocab;
    std::size_t total_chars = 0;
    s.min_len = SIZE_MAX;
    s.min_chars = SIZE_MAX;
    for (const auto& u : bundle.utterances) {
        const auto tokens = utf8::split_whitespace(u.text);
        for (const auto& t : tokens) vocab.insert(t);
        s.total_words += tokens.size();
        s.max_len = std::max(s.max_len, tokens.size());
        s.min_len = std::min(s.min_len, tokens.size());
        const auto chars = utf8::count_scalars(u.text);
        total_chars += chars;
        s.max_chars = std::max(s.max_chars, chars);
        s.min_chars = std::min(s.min_chars, chars);
    }
    const auto n = static_cast<double>(bundle.utterances.size());
    s.unique_words = vocab.size();
    s.avg_len = static_cast<double>(s.total_words) / n;
    s.avg_chars = static_cast<double>(total_chars) / n;
    return s;
}

std::vector<std::string> read_class_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open class list '" + path.string() + "'");
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r\n");
        names.push_back(line.substr(first, last - first + 1));
    }
    return names;
}

}  // namespace intentgan
