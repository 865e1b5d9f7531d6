#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metaclust {

inline constexpr char kTitleField[] = "dc:title";
inline constexpr char kDescriptionField[] = "dc:description";
inline constexpr char kDataProviderField[] = "europeana:dataProvider";
inline constexpr char kProviderField[] = "europeana:provider";

enum class RecordKind { original, artificial };

struct Field {
    std::string name;
    std::vector<std::string> values;

    bool operator==(const Field&) const = default;
};

/// One metadata record. Fields are kept sorted by name with unique names.
struct Record {
    std::string id;
    std::string provider;
    std::vector<Field> fields;
    RecordKind kind = RecordKind::original;
    // Ids of the entities an artificial record summarizes.
    std::vector<std::string> provenance;

    const Field* find(std::string_view name) const;
    bool has(std::string_view name) const { return find(name) != nullptr; }

    /// Appends values to a field, creating it in sorted position if needed.
    void add(std::string_view name, std::string value);

    bool operator==(const Record&) const = default;
};

/// Provider key: first europeana:dataProvider value, else first
/// europeana:provider value, else empty.
std::string resolve_provider(const Record& r);

/// A set of selected field names. An empty mask with all_fields set
/// selects every field of every record.
class FieldMask {
public:
    FieldMask() = default;
    explicit FieldMask(std::set<std::string> fields) : fields_(std::move(fields)) {}

    static FieldMask all() {
        FieldMask m;
        m.all_ = true;
        return m;
    }

    bool selects_all() const noexcept { return all_; }
    bool contains(std::string_view name) const {
        return all_ || fields_.find(std::string(name)) != fields_.end();
    }
    const std::set<std::string>& fields() const noexcept { return fields_; }
    bool empty() const noexcept { return !all_ && fields_.empty(); }

    /// "dc:title+dc:type" style key; "*" for all fields.
    std::string key() const;

    bool operator==(const FieldMask&) const = default;

private:
    std::set<std::string> fields_;
    bool all_ = false;
};

using TokenStream = std::vector<std::string>;

/// Concatenates the selected field values in field-name order, splits into
/// maximal alphanumeric runs, case-folds, and drops all-digit tokens.
TokenStream tokenize(const Record& record, const FieldMask& mask);

/// Deterministic byte form of the selected fields: values joined by 0x1F,
/// fields joined by 0x1E, fields in name order, absent fields skipped.
std::string serialize_for_compression(const Record& record, const FieldMask& mask);

inline constexpr char kValueSeparator = '\x1f';
inline constexpr char kFieldSeparator = '\x1e';

struct Reject {
    std::size_t line = 0;
    std::string reason;
};

struct IngestResult {
    std::vector<Record> records;
    std::vector<Reject> rejects;
};

/// Reads newline-delimited JSON records. Blank lines are skipped.
IngestResult ingest(std::istream& in);

/// One export line, without the trailing newline.
std::string record_line(const Record& record);
void write_records(std::ostream& out, std::span<const Record> records);
void write_rejects(std::ostream& out, const std::vector<Reject>& rejects);

/// Thrown on bad run configuration (flags, masks, providers).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when an output invariant does not hold.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace metaclust
