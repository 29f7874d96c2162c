#pragma once

#include <optional>
#include <string>
#include <vector>

#include "autopk/llm_gateway.hpp"
#include "autopk/pk_record.hpp"
#include "autopk/postprocess.hpp"
#include "autopk/table.hpp"
#include "autopk/variant_pipeline.hpp"

namespace autopk {

struct TableMeta {
  std::optional<std::string> caption;
  std::optional<std::string> footnote;
  std::optional<std::string> article_title;
  std::optional<std::string> article_abstract;
};

TableMeta meta_of(const RawTable& raw);

struct SimplifiedTable {
  std::vector<std::string> header;
  csv::Grid rows;
  bool transposed = false;
  std::vector<std::size_t> source_rows;  // body row index of each kept row
};

// Keeps the body rows holding at least one match, transposing first when
// any match sits in a header. Throws EmptySelection when nothing survives.
SimplifiedTable filter_rows(const NormalizedTable& table,
                            const std::vector<VariantMatch>& matches);

// "<cell@header>" pairs separated by spaces, one line per row. Backslash,
// "@", "<", ">" and newlines inside cells or headers are escaped.
std::string to_keyvalue_text(const SimplifiedTable& st);

struct KeyValuePair {
  std::string cell;
  std::string header;
  bool operator==(const KeyValuePair&) const = default;
};

// Inverse of to_keyvalue_text. Throws MalformedInput on unbalanced tokens.
std::vector<std::vector<KeyValuePair>> parse_keyvalue_text(std::string_view text);

struct ReconstructionSettings {
  PromptTemplate reconstruction = default_template(PromptRole::kTableReconstruction);
  PromptTemplate baseline = default_template(PromptRole::kDirectBaseline);
  LlmRoleSettings role;
  std::string column_guidance;  // empty uses the built-in guidance
  PostprocessOptions postprocess;
  std::size_t max_input_chars = 60000;  // baseline guard on the CSV text
};

struct Diagnostic {
  std::string table_id;
  std::string kind;  // ErrorCode name or "truncated_rows"
  std::string message;
};

struct ExtractionOutcome {
  std::vector<PkRecord> records;
  std::vector<Diagnostic> diagnostics;
  std::string prompt_input;  // the key-value text or CSV sent to the model
};

Bindings reconstruction_bindings(std::string_view table_text_slot,
                                 const std::string& table_text,
                                 const TableMeta& meta,
                                 const ReconstructionSettings& settings);

// Renders the reconstruction prompt, calls the gateway and parses the CSV
// block. Records are returned before postprocessing. Throws NoTableFound.
std::vector<PkRecord> reconstruct(const std::string& st_text,
                                  const TableMeta& meta, LlmGateway& gateway,
                                  const ReconstructionSettings& settings,
                                  std::size_t* truncated_rows = nullptr);

// filter_rows -> to_keyvalue_text -> reconstruct -> postprocess. Empty
// selection and unparseable answers become diagnostics with no records.
ExtractionOutcome run_pipeline2(const NormalizedTable& table,
                                const std::vector<VariantMatch>& matches,
                                const TableMeta& meta, LlmGateway& gateway,
                                const ReconstructionSettings& settings);

// Sends the whole table as CSV. Throws InputTooLarge above the size guard.
ExtractionOutcome run_direct_baseline(const NormalizedTable& table,
                                      const TableMeta& meta,
                                      LlmGateway& gateway,
                                      const ReconstructionSettings& settings);

}  // namespace autopk
