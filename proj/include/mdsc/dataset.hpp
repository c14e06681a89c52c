#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mdsc/sequence.hpp"

namespace mdsc {

/// One line of a dataset file: task, user_text, think_text, reply_text.
struct DatasetRecord {
    TaskKind task = TaskKind::T2T;
    std::string user_text;
    std::string think_text;
    std::string reply_text;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

void validate_record(const DatasetRecord& r);

/// Escapes '\\', tab, newline and carriage return as \\ \t \n \r.
std::string escape_field(const std::string& s);
std::string unescape_field(const std::string& s);

std::string serialize_record(const DatasetRecord& r);
DatasetRecord parse_record(const std::string& line);

void write_dataset(std::ostream& os, const std::vector<DatasetRecord>& records, const std::string& header = {});
std::vector<DatasetRecord> read_dataset(std::istream& is);

void save_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records,
                  const std::string& header = {});
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

}  // namespace mdsc
