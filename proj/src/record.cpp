#include "metaclust/record.hpp"

#include "metaclust/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <unordered_set>

namespace metaclust {

using json = nlohmann::json;

const Field* Record::find(std::string_view name) const {
    auto it = std::lower_bound(fields.begin(), fields.end(), name,
                               [](const Field& f, std::string_view n) { return f.name < n; });
    if (it != fields.end() && it->name == name) return &*it;
    return nullptr;
}

void Record::add(std::string_view name, std::string value) {
    auto it = std::lower_bound(fields.begin(), fields.end(), name,
                               [](const Field& f, std::string_view n) { return f.name < n; });
    if (it == fields.end() || it->name != name) {
        it = fields.insert(it, Field{std::string(name), {}});
    }
    it->values.push_back(std::move(value));
}

std::string resolve_provider(const Record& r) {
    for (auto name : {kDataProviderField, kProviderField}) {
        if (const Field* f = r.find(name); f != nullptr && !f->values.empty()) {
            return f->values.front();
        }
    }
    return {};
}

std::string FieldMask::key() const {
    if (all_) return "*";
    std::string out;
    for (const auto& f : fields_) {
        if (!out.empty()) out += '+';
        out += f;
    }
    return out;
}

TokenStream tokenize(const Record& record, const FieldMask& mask) {
    TokenStream tokens;
    for (const Field& f : record.fields) {
        if (!mask.contains(f.name)) continue;
        for (const auto& v : f.values) {
            text::append_words(text::normalize(v), tokens);
        }
    }
    return tokens;
}

std::string serialize_for_compression(const Record& record, const FieldMask& mask) {
    std::string out;
    bool first_field = true;
    for (const Field& f : record.fields) {
        if (!mask.contains(f.name) || f.values.empty()) continue;
        if (!first_field) out += kFieldSeparator;
        first_field = false;
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            if (i > 0) out += kValueSeparator;
            out += f.values[i];
        }
    }
    return out;
}

namespace {

// Returns an empty string on success, otherwise the reject reason.
std::string parse_record(const std::string& line, Record& out) {
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) return "invalid JSON";
    if (!doc.is_object()) return "document is not an object";

    auto id = doc.find("id");
    if (id == doc.end() || !id->is_string()) return "missing string id";
    out.id = id->get<std::string>();
    if (out.id.empty()) return "empty id";

    if (auto fields = doc.find("fields"); fields != doc.end()) {
        if (!fields->is_object()) return "fields is not an object";
        for (const auto& [name, values] : fields->items()) {
            if (!values.is_array()) return "field " + name + " is not an array";
            for (const auto& v : values) {
                if (!v.is_string()) return "field " + name + " has a non-string value";
                out.add(name, v.get<std::string>());
            }
        }
    }

    if (auto kind = doc.find("kind"); kind != doc.end()) {
        if (!kind->is_string()) return "kind is not a string";
        const auto k = kind->get<std::string>();
        if (k == "artificial") {
            out.kind = RecordKind::artificial;
        } else if (k != "original") {
            return "unknown kind " + k;
        }
    }
    if (auto prov = doc.find("provenance"); prov != doc.end()) {
        if (!prov->is_array()) return "provenance is not an array";
        for (const auto& p : *prov) {
            if (!p.is_string()) return "provenance has a non-string entry";
            out.provenance.push_back(p.get<std::string>());
        }
    }

    if (out.kind == RecordKind::original && !out.has(kTitleField) && !out.has(kDescriptionField)) {
        return "neither dc:title nor dc:description present";
    }
    out.provider = resolve_provider(out);
    return {};
}

}  // namespace

IngestResult ingest(std::istream& in) {
    IngestResult result;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Record r;
        if (auto reason = parse_record(line, r); !reason.empty()) {
            result.rejects.push_back({line_no, std::move(reason)});
            continue;
        }
        if (!seen.insert(r.id).second) {
            result.rejects.push_back({line_no, "duplicate id " + r.id});
            continue;
        }
        result.records.push_back(std::move(r));
    }
    return result;
}

std::string record_line(const Record& r) {
    json doc;
    doc["id"] = r.id;
    json fields = json::object();
    for (const Field& f : r.fields) fields[f.name] = f.values;
    doc["fields"] = std::move(fields);
    if (r.kind == RecordKind::artificial) {
        doc["kind"] = "artificial";
        doc["provenance"] = r.provenance;
    }
    return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_records(std::ostream& out, std::span<const Record> records) {
    for (const Record& r : records) out << record_line(r) << '\n';
}

void write_rejects(std::ostream& out, const std::vector<Reject>& rejects) {
    for (const Reject& r : rejects) {
        out << json{{"line", r.line}, {"reason", r.reason}}.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    }
}

}  // namespace metaclust
