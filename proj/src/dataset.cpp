#include "mdsc/dataset.hpp"

#include <fstream>
#include <sstream>

#include "mdsc/error.hpp"

namespace mdsc {

void validate_record(const DatasetRecord& r) {
    if (normalize(r.user_text).empty()) throw FormatError("dataset: empty user_text");
    if (normalize(r.reply_text).empty()) throw FormatError("dataset: empty reply_text");
}

std::string escape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape_field(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out.push_back(s[i]);
            continue;
        }
        if (++i >= s.size()) throw FormatError("dataset: dangling escape");
        switch (s[i]) {
            case '\\': out.push_back('\\'); break;
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            default: throw FormatError(std::string("dataset: unknown escape \\") + s[i]);
        }
    }
    return out;
}

std::string serialize_record(const DatasetRecord& r) {
    return std::string(task_name(r.task)) + '\t' + escape_field(r.user_text) + '\t' + escape_field(r.think_text) +
           '\t' + escape_field(r.reply_text);
}

DatasetRecord parse_record(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    if (fields.size() != 4) {
        throw FormatError("dataset: expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    DatasetRecord r{parse_task(fields[0]), unescape_field(fields[1]), unescape_field(fields[2]),
                    unescape_field(fields[3])};
    validate_record(r);
    return r;
}

void write_dataset(std::ostream& os, const std::vector<DatasetRecord>& records, const std::string& header) {
    if (!header.empty()) {
        std::istringstream hs(header);
        std::string line;
        while (std::getline(hs, line)) os << "# " << line << '\n';
    }
    for (const auto& r : records) os << serialize_record(r) << '\n';
}

std::vector<DatasetRecord> read_dataset(std::istream& is) {
    std::vector<DatasetRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        try {
            out.push_back(parse_record(line));
        } catch (const FormatError& e) {
            throw FormatError(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
        } catch (const LookupError& e) {
            throw FormatError(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
        }
    }
    return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records,
                  const std::string& header) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw PersistenceError("dataset: cannot open " + path.string() + " for writing");
    write_dataset(os, records, header);
    if (!os) throw PersistenceError("dataset: write failed for " + path.string());
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("dataset: cannot open " + path.string());
    return read_dataset(is);
}

}  // namespace mdsc
