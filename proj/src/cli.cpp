#include "tablevc/cli.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tablevc/codec.hpp"
#include "tablevc/csv.hpp"
#include "tablevc/error.hpp"
#include "tablevc/file_util.hpp"
#include "tablevc/harness/experiments.hpp"
#include "tablevc/maintenance.hpp"
#include "tablevc/merge_engine.hpp"
#include "tablevc/repository.hpp"
#include "tablevc/version_ops.hpp"

namespace tablevc {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kRowColumn = "_row";

class RepoLock {
 public:
  RepoLock(const fs::path& root, bool exclusive) {
    fd_ = ::open((root / "LOCK").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) fail(ErrorCode::IoFailure, "cannot open lock file in " + root.string());
    if (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      ::close(fd_);
      fail(ErrorCode::IoFailure, "cannot lock " + root.string());
    }
  }
  RepoLock(const RepoLock&) = delete;
  RepoLock& operator=(const RepoLock&) = delete;
  ~RepoLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }

 private:
  int fd_ = -1;
};

json value_json(const Value& v) {
  switch (v.index()) {
    case 0: return nullptr;
    case 1: return std::get<1>(v);
    case 2: {
      double d = std::get<2>(v);
      if (!std::isfinite(d)) return format_value(v);
      return d;
    }
    case 3: return std::get<3>(v);
    case 4: return format_value(v);
    case 5: return std::get<5>(v);
  }
  return nullptr;
}

json row_json(const Schema& schema, const Row& row) {
  json o = json::object();
  for (std::size_t i = 0; i < schema.columns.size(); ++i) o[schema.columns[i].name] = value_json(row[i]);
  return o;
}

std::string csv_header(const Schema& schema, const char* first = nullptr) {
  std::string line;
  if (first != nullptr) line = first;
  for (const auto& c : schema.columns) {
    if (!line.empty()) line += ',';
    line += csv_escape(c.name);
  }
  return line;
}

std::string csv_row(const Row& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i != 0) line += ',';
    line += csv_value(row[i]);
  }
  return line;
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return read_file(path);
}

Value parse_for_column(const Schema& schema, const std::string& column, const std::string& text) {
  auto idx = schema.column_index(column);
  if (!idx) fail(ErrorCode::InvalidArgument, "unknown column '" + column + "'");
  return parse_value(text, schema.columns[*idx].type);
}

std::vector<std::pair<std::string, Value>> parse_pairs(const Schema& schema, const std::vector<std::string>& items) {
  std::vector<std::pair<std::string, Value>> out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorCode::UsageError, "expected COLUMN=VALUE, got '" + item + "'");
    auto col = item.substr(0, eq);
    out.emplace_back(col, parse_for_column(schema, col, item.substr(eq + 1)));
  }
  return out;
}

std::vector<std::vector<Value>> read_keys(const Schema& schema, const std::string& path) {
  auto text = read_input(path);
  if (!schema.has_primary_key()) return tuples_from_csv(text, {kRowColumn}, {ColumnType::Int64});
  return tuples_from_csv(text, schema.primary_key, schema.key_types());
}

json conflict_json(const Schema& schema, const ConflictRecord& c) {
  json o;
  if (schema.has_primary_key()) {
    json key = json::object();
    for (std::size_t i = 0; i < schema.primary_key.size(); ++i) key[schema.primary_key[i]] = value_json(c.key_or_values[i]);
    o["key"] = std::move(key);
  } else {
    o["values"] = row_json(schema, c.key_or_values);
  }
  o["kind"] = to_string(c.kind);
  o["scenario"] = c.scenario;
  if (schema.has_primary_key()) {
    auto side = [&](bool changed, const std::optional<Row>& row) {
      if (!changed) return json("unchanged");
      return row ? row_json(schema, *row) : json(nullptr);
    };
    o["target"] = side(c.target_changed, c.target_row);
    o["source"] = side(c.source_changed, c.source_row);
  } else {
    o["delta_target"] = c.delta_target;
    o["delta_source"] = c.delta_source;
  }
  o["resolution"] = to_string(c.resolution);
  return o;
}

json report_json(const Schema& schema, const MergeReport& r) {
  json o;
  o["committed"] = r.committed_ts.has_value();
  o["committed_ts"] = r.committed_ts ? json(*r.committed_ts) : json(nullptr);
  o["empty_base"] = r.empty_base;
  o["applied_inserts"] = r.applied_inserts;
  o["applied_deletes"] = r.applied_deletes;
  o["true_conflicts"] = r.true_conflicts;
  o["false_conflicts"] = r.false_conflicts;
  o["conflicts"] = json::array();
  for (const auto& c : r.conflicts) o["conflicts"].push_back(conflict_json(schema, c));
  return o;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoFailure:
    case ErrorCode::CorruptObject:
    case ErrorCode::MissingObject:
    case ErrorCode::BaseMismatch:
    case ErrorCode::NegativeCount:
    case ErrorCode::UnsortedInput:
    case ErrorCode::Internal: return 3;
    case ErrorCode::MergeConflictFailure: return 2;
    default: return 1;
  }
}

struct Cli {
  std::ostream& out;
  std::string repo_path;
  std::string format = "csv";

  fs::path root() const {
    if (!repo_path.empty()) return repo_path;
    if (const char* env = std::getenv("TABLEVC_REPO"); env != nullptr && *env != '\0') return env;
    fail(ErrorCode::UsageError, "no repository given (use --repo or TABLEVC_REPO)");
  }

  template <typename F>
  void with_repo(bool exclusive, F&& f) {
    auto r = root();
    if (!fs::exists(r / "catalog.json")) fail(ErrorCode::NotFound, "no repository at " + r.string());
    RepoLock lock(r, exclusive);
    auto repo = Repository::open(r);
    f(repo);
  }

  void print_rows(const Schema& schema, const std::vector<ScanEntry>& entries, bool row_ids) {
    bool ids = row_ids && !schema.has_primary_key();
    if (format == "jsonl") {
      for (const auto& e : entries) {
        json o = json::object();
        if (ids) o[kRowColumn] = value_json(decode_key(e.key).at(0));
        for (std::size_t i = 0; i < schema.columns.size(); ++i) o[schema.columns[i].name] = value_json(e.values[i]);
        out << o.dump() << '\n';
      }
      return;
    }
    out << csv_header(schema, ids ? kRowColumn : nullptr) << '\n';
    for (const auto& e : entries) {
      if (ids) out << csv_value(decode_key(e.key).at(0)) << ',';
      out << csv_row(e.values) << '\n';
    }
  }

  void print_diff(const Schema& schema, const std::vector<DiffRow>& rows) {
    if (format == "jsonl") {
      for (const auto& r : rows) {
        json o;
        o["diff_cnt"] = r.diff_cnt;
        o["values"] = row_json(schema, r.values);
        out << o.dump() << '\n';
      }
      return;
    }
    out << csv_header(schema, "diff_cnt") << '\n';
    for (const auto& r : rows) out << r.diff_cnt << ',' << csv_row(r.values) << '\n';
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Versioned tables with snapshots, clones, diff and merge", "tablevc"};
  app.require_subcommand(1);
  app.fallthrough();
  Cli cli{out, {}, "csv"};
  app.add_option("--repo", cli.repo_path, "Repository directory (default: $TABLEVC_REPO)");
  app.add_option("--format", cli.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));

  auto* init = app.add_subcommand("init", "Create an empty repository");
  std::optional<std::uint64_t> retention;
  init->add_option("--retention", retention, "Commits of history kept for timestamp references");

  auto* create = app.add_subcommand("create-table", "Create a table");
  std::string table, name, source, base, keys_file, csv_file, on_conflict = "fail", path = "auto";
  std::vector<std::string> columns, pk, where, set;
  create->add_option("table", table)->required();
  create->add_option("-c,--column", columns, "NAME:TYPE (int64, float64, string, bytes, bool)")->required();
  create->add_option("--pk", pk, "Primary key column")->delimiter(',');

  auto* drop = app.add_subcommand("drop-table", "Drop a table");
  drop->add_option("table", table)->required();

  auto* tables = app.add_subcommand("tables", "List tables");

  auto* insert = app.add_subcommand("insert", "Insert rows from CSV");
  insert->add_option("table", table)->required();
  insert->add_option("--csv", csv_file, "CSV file with a header row, - for stdin")->required();

  auto* del = app.add_subcommand("delete", "Delete rows");
  del->add_option("table", table)->required();
  auto* del_keys = del->add_option("--keys", keys_file, "CSV of key tuples (or _row for tables without a key)");
  auto* del_where = del->add_option("--where", where, "COLUMN=VALUE, all must hold");
  del_keys->excludes(del_where);

  auto* upd = app.add_subcommand("update", "Update rows");
  upd->add_option("table", table)->required();
  auto* upd_keys = upd->add_option("--keys", keys_file);
  auto* upd_where = upd->add_option("--where", where);
  upd_keys->excludes(upd_where);
  upd->add_option("--set", set, "COLUMN=VALUE")->required();

  auto* scan = app.add_subcommand("scan", "Print the rows of a version");
  scan->add_option("ref", source, "TABLE, TABLE@SNAPSHOT or TABLE@ts:N")->required();
  bool row_ids = false;
  scan->add_flag("--row-ids", row_ids, "Include the _row column for tables without a key");

  auto* snap = app.add_subcommand("snapshot", "Manage named snapshots");
  snap->require_subcommand(1);
  auto* snap_create = snap->add_subcommand("create", "Create a snapshot of the current version");
  snap_create->add_option("table", table)->required();
  snap_create->add_option("name", name)->required();
  auto* snap_list = snap->add_subcommand("list", "List snapshots");
  snap_list->add_option("table", table)->required();
  auto* snap_drop = snap->add_subcommand("drop", "Drop a snapshot");
  snap_drop->add_option("table", table)->required();
  snap_drop->add_option("name", name)->required();

  auto* clone = app.add_subcommand("clone", "Clone a version into a new table");
  clone->add_option("source", source)->required();
  clone->add_option("table", table)->required();

  auto* restore = app.add_subcommand("restore", "Make a version the current version of a table");
  restore->add_option("table", table)->required();
  restore->add_option("source", source)->required();

  auto* diff = app.add_subcommand("diff", "Rows whose multiplicity differs between two versions");
  std::string ref_a, ref_b;
  diff->add_option("a", ref_a)->required();
  diff->add_option("b", ref_b)->required();
  diff->add_option("--base", base, "Common base version");
  diff->add_option("--path", path, "auto, fast or fallback")->check(CLI::IsMember({"auto", "fast", "fallback"}));

  auto* mrg = app.add_subcommand("merge", "Merge changes of a version into a table");
  mrg->add_option("table", table)->required();
  mrg->add_option("--from", source)->required();
  mrg->add_option("--base", base, "Common base version");
  mrg->add_option("--on-conflict", on_conflict)->check(CLI::IsMember({"fail", "skip", "accept"}));
  bool no_lineage = false;
  mrg->add_flag("--no-lineage", no_lineage, "Do not look up a common base; merge against an empty base");

  auto* cmp = app.add_subcommand("compact", "Rewrite a table into full objects");
  cmp->add_option("table", table)->required();

  auto* gcc = app.add_subcommand("gc", "Delete unreferenced objects");
  bool dry_run = false;
  gcc->add_flag("--dry-run", dry_run);

  auto* bench = app.add_subcommand("bench", "Run an experiment in a scratch repository");
  harness::ExperimentOptions eo;
  std::string change_set, out_file, workdir;
  bench->add_option("--experiment", eo.name)->check(CLI::IsMember({"E1", "E2", "E3", "E4"}))->required();
  bench->add_option("--change-set", change_set)->check(CLI::IsMember({"C1", "C2", "C3", "C4"}));
  bench->add_option("--base-rows", eo.base_rows);
  bench->add_option("--overlap", eo.overlap_pct);
  bench->add_option("--seed", eo.seed);
  bench->add_option("--out", out_file);
  bench->add_option("--workdir", workdir);
  bool bench_pk = false, no_verify = false;
  bench->add_flag("--pk", bench_pk);
  bench->add_flag("--no-verify", no_verify);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("tablevc");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*init) {
      auto r = cli.root();
      fs::create_directories(r);
      RepoLock lock(r, true);
      Repository::init(r, retention);
    } else if (*create) {
      Schema schema;
      for (const auto& c : columns) {
        auto colon = c.find(':');
        if (colon == std::string::npos) fail(ErrorCode::UsageError, "expected NAME:TYPE, got '" + c + "'");
        auto type = parse_column_type(c.substr(colon + 1));
        if (!type) fail(ErrorCode::UsageError, "unknown column type in '" + c + "'");
        schema.columns.push_back({c.substr(0, colon), *type});
      }
      schema.primary_key = pk;
      cli.with_repo(true, [&](Repository& repo) { repo.create_table(table, schema); });
    } else if (*drop) {
      cli.with_repo(true, [&](Repository& repo) { repo.drop_table(repo.table_id(table)); });
    } else if (*tables) {
      cli.with_repo(false, [&](Repository& repo) {
        for (const auto& n : repo.table_names()) {
          auto schema = repo.schema(repo.table_id(n));
          json o;
          o["name"] = n;
          o["columns"] = json::array();
          for (const auto& c : schema.columns) o["columns"].push_back({{"name", c.name}, {"type", to_string(c.type)}});
          o["primary_key"] = schema.primary_key;
          out << o.dump() << '\n';
        }
      });
    } else if (*insert) {
      cli.with_repo(true, [&](Repository& repo) {
        auto id = repo.table_id(table);
        auto rows = rows_from_csv(read_input(csv_file), repo.schema(id));
        auto txn = repo.begin(id);
        txn.insert(rows);
        txn.commit();
        repo.flush(id);
        out << json{{"inserted", rows.size()}}.dump() << '\n';
      });
    } else if (*del || *upd) {
      bool updating = upd->parsed();
      if (keys_file.empty() && where.empty()) fail(ErrorCode::UsageError, "give --keys or --where");
      cli.with_repo(true, [&](Repository& repo) {
        auto id = repo.table_id(table);
        auto schema = repo.schema(id);
        auto txn = repo.begin(id);
        std::size_t n = 0;
        if (updating) {
          auto assignments = parse_pairs(schema, set);
          n = keys_file.empty() ? txn.update_where(parse_pairs(schema, where), assignments)
                                : txn.update_keys(read_keys(schema, keys_file), assignments);
        } else {
          n = keys_file.empty() ? txn.delete_where(parse_pairs(schema, where))
                                : txn.delete_keys(read_keys(schema, keys_file));
        }
        txn.commit();
        repo.flush(id);
        out << json{{updating ? "updated" : "deleted", n}}.dump() << '\n';
      });
    } else if (*scan) {
      cli.with_repo(false, [&](Repository& repo) {
        auto ref = repo.ref(source);
        cli.print_rows(repo.schema(ref.table), repo.scan_entries(ref), row_ids);
      });
    } else if (*snap_create) {
      cli.with_repo(true, [&](Repository& repo) { repo.create_snapshot(repo.table_id(table), name); });
    } else if (*snap_list) {
      cli.with_repo(false, [&](Repository& repo) {
        for (const auto& s : repo.list_snapshots(repo.table_id(table))) {
          out << json{{"name", s.name}, {"created_ts", s.created_ts}}.dump() << '\n';
        }
      });
    } else if (*snap_drop) {
      cli.with_repo(true, [&](Repository& repo) { repo.drop_snapshot(repo.table_id(table), name); });
    } else if (*clone) {
      cli.with_repo(true, [&](Repository& repo) { repo.clone_table(repo.ref(source), table); });
    } else if (*restore) {
      cli.with_repo(true, [&](Repository& repo) { repo.restore_table(repo.table_id(table), repo.ref(source)); });
    } else if (*diff) {
      cli.with_repo(false, [&](Repository& repo) {
        DiffOptions opts;
        if (!base.empty()) opts.base = repo.ref(base);
        opts.path = path == "fast" ? DiffPath::Fast : path == "fallback" ? DiffPath::Fallback : DiffPath::Auto;
        auto a = repo.ref(ref_a);
        cli.print_diff(repo.schema(a.table), snapshot_diff(repo, a, repo.ref(ref_b), opts));
      });
    } else if (*mrg) {
      cli.with_repo(true, [&](Repository& repo) {
        auto id = repo.table_id(table);
        MergeOptions opts;
        opts.mode = *parse_merge_mode(on_conflict);
        if (!base.empty()) opts.base = repo.ref(base);
        opts.use_lineage = !no_lineage;
        auto schema = repo.schema(id);
        try {
          auto report = merge(repo, id, repo.ref(source), opts);
          repo.flush(id);
          out << report_json(schema, report).dump(2) << '\n';
        } catch (const MergeConflictError& e) {
          out << report_json(schema, e.report()).dump(2) << '\n';
          throw;
        }
      });
    } else if (*cmp) {
      cli.with_repo(true, [&](Repository& repo) {
        auto r = compact(repo, repo.table_id(table));
        out << json{{"changed", r.changed},
                    {"objects_before", r.objects_before},
                    {"objects_after", r.objects_after},
                    {"rows", r.rows}}
                   .dump()
            << '\n';
      });
    } else if (*gcc) {
      cli.with_repo(true, [&](Repository& repo) {
        auto r = gc(repo, dry_run);
        out << json{{"dry_run", r.dry_run},
                    {"objects_deleted", r.objects_deleted},
                    {"manifests_deleted", r.manifests_deleted},
                    {"bytes_reclaimed", r.bytes_reclaimed},
                    {"history_pruned", r.history_pruned},
                    {"objects_kept", r.objects_kept}}
                   .dump()
            << '\n';
      });
    } else if (*bench) {
      if (!change_set.empty()) eo.change_rows = harness::change_set_rows(change_set);
      eo.primary_key = bench_pk;
      eo.verify = !no_verify;
      bool scratch = workdir.empty();
      eo.workdir = scratch ? fs::temp_directory_path() / ("tablevc-bench-" + std::to_string(::getpid())) : fs::path(workdir);
      if (fs::exists(eo.workdir)) fail(ErrorCode::InvalidArgument, "work directory exists: " + eo.workdir.string());
      json report;
      try {
        report = harness::run_experiment(eo);
      } catch (...) {
        if (scratch) fs::remove_all(eo.workdir);
        throw;
      }
      if (scratch) fs::remove_all(eo.workdir);
      auto text = report.dump(2);
      if (!out_file.empty()) write_file_atomic(out_file, text + "\n", false);
      out << text << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace tablevc
