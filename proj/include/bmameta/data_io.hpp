#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bmameta/model_space.hpp"

namespace bmameta {

struct RowDiagnostic {
  std::size_t row = 0;  // 1-based line number in the file, header is line 1
  std::string field;
  std::string message;
};

struct CsvTable {
  std::vector<std::string> header;            // lower-cased, trimmed
  std::vector<std::vector<std::string>> rows;  // trimmed cells
  std::vector<std::size_t> line_numbers;
};

// RFC 4180 style: quoted cells with "" escapes, CRLF tolerated, UTF-8 BOM
// skipped, blank lines ignored. Throws ParseError with the line number.
CsvTable parse_csv(std::string_view text);

// Accepts `study,a,b,c,d` (tables) or `study,y,se` (estimates). Throws
// ParseError("no data rows") for a header-only file, MixedSchemaError when
// both column sets are present, and a row-located InvalidEstimateError /
// InvalidTableError / ParseError listing every bad row.
Dataset dataset_from_csv(std::string_view text, Measure measure);
Dataset ingest(const std::string& path, Measure measure);

// Same schemas with a leading `comparison` column; one dataset per
// comparison in order of first appearance.
std::vector<Dataset> corpus_from_csv(std::string_view text, Measure measure);
std::vector<Dataset> ingest_corpus(const std::string& path, Measure measure);

// Values for prior fitting: the `value` column, or the only column.
std::vector<double> values_from_csv(std::string_view text);

// Inverse of dataset_from_csv; numbers use shortest round-trip formatting.
std::string dataset_to_csv(const Dataset& data);

std::string read_file(const std::string& path);

}  // namespace bmameta
