#include "autopk/reconstruction.hpp"

#include <set>

#include <spdlog/spdlog.h>

#include "autopk/error.hpp"
#include "autopk/response_parsing.hpp"

namespace autopk {
namespace {

void append_escaped(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '\\': case '@': case '<': case '>':
        out.push_back('\\');
        out.push_back(c);
        break;
      case '\n':
        out += "\\n";
        break;
      default:
        out.push_back(c);
    }
  }
}

std::vector<PkRecord> parse_records(const std::string& answer,
                                    std::size_t* truncated_rows) {
  const auto block = parse_csv_block(answer, pk_header());
  if (truncated_rows) *truncated_rows = block.truncated_rows;
  std::vector<PkRecord> records;
  records.reserve(block.rows.size());
  for (const auto& row : block.rows) records.push_back(record_from_row(row));
  return records;
}

ExtractionOutcome finish(const std::string& table_id, std::string input,
                         const PromptTemplate& prompt, std::string_view slot_name,
                         const TableMeta& meta, LlmGateway& gateway,
                         const ReconstructionSettings& settings) {
  ExtractionOutcome outcome;
  outcome.prompt_input = std::move(input);
  const auto messages = render(
      prompt,
      reconstruction_bindings(slot_name, outcome.prompt_input, meta, settings));
  const auto answer =
      gateway.complete(make_request(settings.role.model, messages,
                                    settings.role.generation));
  std::size_t truncated = 0;
  try {
    outcome.records = postprocess(parse_records(answer.text, &truncated),
                                  settings.postprocess);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoTableFound) throw;
    spdlog::warn("{}: {}", table_id, e.what());
    outcome.diagnostics.push_back(
        {table_id, std::string(to_string(e.code())), e.what()});
    return outcome;
  }
  if (truncated > 0) {
    outcome.diagnostics.push_back(
        {table_id, "truncated_rows",
         std::to_string(truncated) + " answer rows had extra columns"});
  }
  return outcome;
}

}  // namespace

TableMeta meta_of(const RawTable& raw) {
  return {raw.caption, raw.footnote, raw.article_title, raw.article_abstract};
}

SimplifiedTable filter_rows(const NormalizedTable& table,
                            const std::vector<VariantMatch>& matches) {
  const bool header_hit =
      std::any_of(matches.begin(), matches.end(), [](const VariantMatch& m) {
        return m.location.axis == CellAxis::kHeader;
      });
  SimplifiedTable st;
  st.transposed = header_hit;
  const NormalizedTable source = header_hit ? transpose(table) : table;
  st.header = source.header;

  std::set<std::size_t> keep;
  for (const auto& m : matches) {
    const auto& loc = m.location;
    if (!header_hit) {
      keep.insert(loc.row);
      continue;
    }
    // Column j of the original becomes body row j-1 after transposing;
    // column 0 becomes the new header.
    if (loc.col == 0) continue;
    keep.insert(loc.col - 1);
  }
  for (auto r : keep) {
    if (r >= source.rows.size()) {
      throw Error(ErrorCode::kMalformedInput,
                  "match outside table " + table.provenance_id);
    }
    st.rows.push_back(source.rows[r]);
    st.source_rows.push_back(r);
  }
  if (st.rows.empty()) {
    throw Error(ErrorCode::kEmptySelection,
                "no variant-bearing rows in " + table.provenance_id);
  }
  return st;
}

std::string to_keyvalue_text(const SimplifiedTable& st) {
  std::string out;
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    if (r > 0) out.push_back('\n');
    bool first = true;
    for (std::size_t c = 0; c < st.rows[r].size(); ++c) {
      const auto& cell = st.rows[r][c];
      if (cell.empty()) continue;
      if (!first) out.push_back(' ');
      first = false;
      out.push_back('<');
      append_escaped(out, cell);
      out.push_back('@');
      append_escaped(out, c < st.header.size() ? st.header[c] : std::string());
      out.push_back('>');
    }
  }
  return out;
}

std::vector<std::vector<KeyValuePair>> parse_keyvalue_text(std::string_view text) {
  std::vector<std::vector<KeyValuePair>> rows;
  if (text.empty()) return rows;
  rows.emplace_back();
  std::size_t i = 0;
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kMalformedInput, "key-value text: " + why);
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      rows.emplace_back();
      ++i;
      continue;
    }
    if (c == ' ') {
      ++i;
      continue;
    }
    if (c != '<') fail("unexpected character outside a pair");
    ++i;
    KeyValuePair pair;
    std::string* target = &pair.cell;
    bool closed = false;
    while (i < text.size()) {
      const char d = text[i++];
      if (d == '\\') {
        if (i >= text.size()) fail("dangling escape");
        const char e = text[i++];
        target->push_back(e == 'n' ? '\n' : e);
      } else if (d == '@') {
        if (target == &pair.header) fail("second unescaped '@'");
        target = &pair.header;
      } else if (d == '>') {
        closed = true;
        break;
      } else if (d == '<') {
        fail("unescaped '<' inside a pair");
      } else {
        target->push_back(d);
      }
    }
    if (!closed) fail("unterminated pair");
    if (target != &pair.header) fail("pair without '@'");
    rows.back().push_back(std::move(pair));
  }
  return rows;
}

Bindings reconstruction_bindings(std::string_view table_text_slot,
                                 const std::string& table_text,
                                 const TableMeta& meta,
                                 const ReconstructionSettings& settings) {
  Bindings b;
  b.emplace(table_text_slot, table_text);
  b.emplace(slot::kColumnGuidance,
            settings.column_guidance.empty()
                ? std::string(default_column_guidance())
                : settings.column_guidance);
  b.emplace(slot::kFootnote, value_or_none(meta.footnote));
  b.emplace(slot::kCaption, value_or_none(meta.caption));
  b.emplace(slot::kTitle, value_or_none(meta.article_title));
  b.emplace(slot::kAbstract, value_or_none(meta.article_abstract));
  return b;
}

std::vector<PkRecord> reconstruct(const std::string& st_text,
                                  const TableMeta& meta, LlmGateway& gateway,
                                  const ReconstructionSettings& settings,
                                  std::size_t* truncated_rows) {
  const auto messages =
      render(settings.reconstruction,
             reconstruction_bindings(slot::kCustomTable, st_text, meta, settings));
  const auto answer = gateway.complete(
      make_request(settings.role.model, messages, settings.role.generation));
  return parse_records(answer.text, truncated_rows);
}

ExtractionOutcome run_pipeline2(const NormalizedTable& table,
                                const std::vector<VariantMatch>& matches,
                                const TableMeta& meta, LlmGateway& gateway,
                                const ReconstructionSettings& settings) {
  SimplifiedTable st;
  try {
    st = filter_rows(table, matches);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptySelection) throw;
    ExtractionOutcome outcome;
    outcome.diagnostics.push_back(
        {table.provenance_id, std::string(to_string(e.code())), e.what()});
    return outcome;
  }
  return finish(table.provenance_id, to_keyvalue_text(st),
                settings.reconstruction, slot::kCustomTable, meta, gateway,
                settings);
}

ExtractionOutcome run_direct_baseline(const NormalizedTable& table,
                                      const TableMeta& meta,
                                      LlmGateway& gateway,
                                      const ReconstructionSettings& settings) {
  auto csv_text = serialize_csv(table);
  if (csv_text.size() > settings.max_input_chars) {
    throw Error(ErrorCode::kInputTooLarge,
                table.provenance_id + " serializes to " +
                    std::to_string(csv_text.size()) + " characters (limit " +
                    std::to_string(settings.max_input_chars) + ")");
  }
  return finish(table.provenance_id, std::move(csv_text), settings.baseline,
                slot::kTableCsv, meta, gateway, settings);
}

}  // namespace autopk
