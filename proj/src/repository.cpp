#include <algorithm>

#include "repo_impl.hpp"
#include "tablevc/error.hpp"
#include "tablevc/file_util.hpp"

namespace tablevc {

namespace detail {

RepoImpl::RepoImpl(std::filesystem::path root_dir, RepoOptions opts, CatalogState state)
    : root(std::move(root_dir)),
      options(opts),
      store(root / "objects", StoreOptions{opts.group_rows, opts.sync}),
      manifests(root / "manifests", opts.sync),
      catalog(std::move(state)) {}

RepoImpl::~RepoImpl() {
  std::lock_guard lock(mu);
  for (auto& [id, rt] : runtime) {
    if (rt.tail.empty() || catalog.tables.count(static_cast<TableId>(id)) == 0) continue;
    try {
      flush_locked(static_cast<TableId>(id));
    } catch (const std::exception&) {
    }
  }
}

TableMeta& RepoImpl::table_locked(TableId id) {
  auto it = catalog.tables.find(id);
  if (it == catalog.tables.end()) {
    fail(ErrorCode::UnknownTable, "no table with id " + std::to_string(static_cast<std::uint64_t>(id)));
  }
  return it->second;
}

const TableMeta& RepoImpl::table_locked(TableId id) const { return const_cast<RepoImpl*>(this)->table_locked(id); }

TableRuntime& RepoImpl::runtime_locked(TableId id) { return runtime[static_cast<std::uint64_t>(id)]; }

void RepoImpl::save_root_locked() {
  auto text = catalog_root_to_json(catalog);
  write_file_atomic(root / "catalog.json", text, options.sync);
  catalog_bytes += text.size();
}

void RepoImpl::save_table_locked(TableId id) {
  auto text = table_to_json(table_locked(id), catalog);
  write_file_atomic(root / "tables" / (std::to_string(static_cast<std::uint64_t>(id)) + ".json"), text, options.sync);
  catalog_bytes += text.size();
}

void RepoImpl::remove_table_file_locked(TableId id) {
  std::error_code ec;
  std::filesystem::remove(root / "tables" / (std::to_string(static_cast<std::uint64_t>(id)) + ".json"), ec);
  if (ec) fail(ErrorCode::IoFailure, "remove table file: " + ec.message());
}

void RepoImpl::check_retention_locked(CommitTs ts) const {
  if (!catalog.retention_commits) return;
  auto horizon = *catalog.retention_commits;
  if (catalog.clock > horizon && ts < catalog.clock - horizon) {
    fail(ErrorCode::OutOfRetention, "timestamp " + std::to_string(ts) + " is older than the retention horizon (" +
                                        std::to_string(catalog.clock - horizon) + ")");
  }
}

std::shared_ptr<const Manifest> RepoImpl::empty_manifest(const Schema& schema) const {
  auto m = std::make_shared<Manifest>();
  m->schema_hash = schema.digest();
  return m;
}

Version RepoImpl::resolve_locked(const SnapshotRef& ref) {
  const auto& meta = table_locked(ref.table);
  if (ref.kind == SnapshotRef::Kind::Current) {
    flush_locked(ref.table);
  } else if (ref.kind == SnapshotRef::Kind::AtTimestamp) {
    check_retention_locked(ref.ts);
    bool current_epoch = ref.ts >= meta.created_ts &&
                         std::none_of(meta.history.begin(), meta.history.end(),
                                      [&](const HistoryEntry& h) { return ref.ts < h.until; });
    if (current_epoch) flush_locked(ref.table);
  }
  auto v = view_locked(ref, false);
  return Version{ref.table, v.schema, v.manifest, v.id};
}

bool RepoImpl::lineage_available_locked(const Lineage& l) const {
  auto it = catalog.tables.find(l.parent);
  if (it == catalog.tables.end()) return false;
  if (l.snapshot) {
    auto s = it->second.snapshots.find(*l.snapshot);
    if (s == it->second.snapshots.end() || s->second != l.manifest) return false;
  }
  return manifests.exists(l.manifest);
}

ManifestId RepoImpl::persist_locked(const Version& v) {
  if (v.id) return *v.id;
  return manifests.write(*v.manifest);
}

void RepoImpl::replace_current_locked(TableId id, ManifestId next) {
  auto& meta = table_locked(id);
  auto ts = ++catalog.clock;
  meta.history.push_back({ts, meta.current});
  meta.current = next;
  runtime_locked(id).last_rewrite_ts = ts;
  save_table_locked(id);
}

}  // namespace detail

namespace {

void check_name(const std::string& name, const char* what) {
  bool bad = name.empty() || name.find('@') != std::string::npos ||
             std::any_of(name.begin(), name.end(), [](char c) {
               return std::isspace(static_cast<unsigned char>(c)) || c == '/' || c == ',';
             });
  if (bad) fail(ErrorCode::InvalidArgument, std::string("invalid ") + what + " name '" + name + "'");
}

}  // namespace

Repository::Repository(std::shared_ptr<detail::RepoImpl> impl) : impl_(std::move(impl)) {}

Repository Repository::init(const std::filesystem::path& root, std::optional<std::uint64_t> retention_commits,
                            RepoOptions options) {
  std::error_code ec;
  std::filesystem::create_directories(root / "tables", ec);
  if (ec) fail(ErrorCode::IoFailure, "create " + root.string() + ": " + ec.message());
  if (std::filesystem::exists(root / "catalog.json")) {
    fail(ErrorCode::InvalidArgument, "a repository already exists at " + root.string());
  }
  CatalogState state;
  state.retention_commits = retention_commits;
  auto impl = std::make_shared<detail::RepoImpl>(root, options, std::move(state));
  std::lock_guard lock(impl->mu);
  impl->save_root_locked();
  return Repository(impl);
}

Repository Repository::open(const std::filesystem::path& root, RepoOptions options) {
  auto path = root / "catalog.json";
  if (!std::filesystem::exists(path)) fail(ErrorCode::NotFound, "no repository at " + root.string());
  std::vector<std::string> tables;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(root / "tables", ec)) {
    if (entry.path().extension() == ".json") tables.push_back(read_file(entry.path()));
  }
  if (ec) fail(ErrorCode::IoFailure, "list " + (root / "tables").string() + ": " + ec.message());
  auto impl = std::make_shared<detail::RepoImpl>(root, options, catalog_from_json(read_file(path), tables));
  return Repository(impl);
}

const std::filesystem::path& Repository::root() const { return impl_->root; }
const RepoOptions& Repository::options() const { return impl_->options; }
ObjectStore& Repository::store() { return impl_->store; }
const ObjectStore& Repository::store() const { return impl_->store; }

TableId Repository::create_table(const std::string& name, const Schema& schema) {
  check_name(name, "table");
  schema.validate();
  std::lock_guard lock(impl_->mu);
  auto& cat = impl_->catalog;
  if (cat.find(name) != nullptr) fail(ErrorCode::DuplicateName, "table '" + name + "' already exists");
  TableMeta meta;
  meta.id = static_cast<TableId>(cat.next_table_id++);
  meta.name = name;
  meta.schema = schema;
  meta.created_ts = cat.clock;
  Manifest empty;
  empty.created_ts = cat.clock;
  empty.schema_hash = schema.digest();
  meta.current = impl_->manifests.write(empty);
  auto id = meta.id;
  cat.tables.emplace(id, std::move(meta));
  impl_->save_table_locked(id);
  return id;
}

void Repository::drop_table(TableId table) {
  std::lock_guard lock(impl_->mu);
  impl_->table_locked(table);
  // The root keeps the clock in case the dropped table held the latest value.
  impl_->save_root_locked();
  impl_->remove_table_file_locked(table);
  impl_->catalog.tables.erase(table);
  impl_->runtime.erase(static_cast<std::uint64_t>(table));
}

TableId Repository::table_id(std::string_view name) const {
  auto id = find_table(name);
  if (!id) fail(ErrorCode::UnknownTable, "no table named '" + std::string(name) + "'");
  return *id;
}

std::optional<TableId> Repository::find_table(std::string_view name) const {
  std::lock_guard lock(impl_->mu);
  if (const auto* t = impl_->catalog.find(name)) return t->id;
  return std::nullopt;
}

std::string Repository::table_name(TableId table) const {
  std::lock_guard lock(impl_->mu);
  return impl_->table_locked(table).name;
}

Schema Repository::schema(TableId table) const {
  std::lock_guard lock(impl_->mu);
  return impl_->table_locked(table).schema;
}

std::vector<std::string> Repository::table_names() const {
  std::lock_guard lock(impl_->mu);
  std::vector<std::string> out;
  for (const auto& [id, t] : impl_->catalog.tables) out.push_back(t.name);
  std::sort(out.begin(), out.end());
  return out;
}

SnapshotRef Repository::ref(const RefSpec& spec) const {
  auto id = table_id(spec.table);
  switch (spec.kind) {
    case SnapshotRef::Kind::Current: return SnapshotRef::current(id);
    case SnapshotRef::Kind::Named: return SnapshotRef::named(id, spec.snapshot);
    case SnapshotRef::Kind::AtTimestamp: return SnapshotRef::at(id, spec.ts);
  }
  return SnapshotRef::current(id);
}

SnapshotRef Repository::ref(std::string_view text) const { return ref(RefSpec::parse(text)); }

RefSpec Repository::spec(const SnapshotRef& r) const {
  RefSpec s;
  s.table = table_name(r.table);
  s.kind = r.kind;
  s.snapshot = r.name;
  s.ts = r.ts;
  return s;
}

SnapshotRef Repository::create_snapshot(TableId table, const std::string& name) {
  check_name(name, "snapshot");
  if (name.rfind("ts:", 0) == 0) fail(ErrorCode::InvalidArgument, "snapshot names may not start with 'ts:'");
  std::lock_guard lock(impl_->mu);
  auto& meta = impl_->table_locked(table);
  if (meta.snapshots.count(name) != 0) {
    fail(ErrorCode::DuplicateSnapshotName, "table '" + meta.name + "' already has snapshot '" + name + "'");
  }
  impl_->flush_locked(table);
  meta.snapshots[name] = meta.current;
  impl_->save_table_locked(table);
  return SnapshotRef::named(table, name);
}

void Repository::drop_snapshot(TableId table, const std::string& name) {
  std::lock_guard lock(impl_->mu);
  auto& meta = impl_->table_locked(table);
  if (meta.snapshots.erase(name) == 0) {
    fail(ErrorCode::UnknownSnapshot, "table '" + meta.name + "' has no snapshot '" + name + "'");
  }
  impl_->save_table_locked(table);
}

std::vector<SnapshotInfo> Repository::list_snapshots(TableId table) const {
  std::lock_guard lock(impl_->mu);
  std::vector<SnapshotInfo> out;
  for (const auto& [name, mid] : impl_->table_locked(table).snapshots) {
    out.push_back({name, mid, impl_->manifests.read(mid)->created_ts});
  }
  return out;
}

Version Repository::resolve(const SnapshotRef& r) {
  std::lock_guard lock(impl_->mu);
  return impl_->resolve_locked(r);
}

TableId Repository::clone_table(const SnapshotRef& src, const std::string& dst_name) {
  check_name(dst_name, "table");
  std::lock_guard lock(impl_->mu);
  auto& cat = impl_->catalog;
  if (cat.find(dst_name) != nullptr) fail(ErrorCode::DuplicateName, "table '" + dst_name + "' already exists");
  auto version = impl_->resolve_locked(src);
  auto mid = impl_->persist_locked(version);
  TableMeta meta;
  meta.id = static_cast<TableId>(cat.next_table_id++);
  meta.name = dst_name;
  meta.schema = version.schema;
  meta.created_ts = cat.clock;
  meta.current = mid;
  Lineage lineage{src.table, mid, std::nullopt};
  if (src.kind == SnapshotRef::Kind::Named) lineage.snapshot = src.name;
  meta.lineage = lineage;
  auto id = meta.id;
  cat.tables.emplace(id, std::move(meta));
  impl_->save_table_locked(id);
  return id;
}

void Repository::restore_table(TableId table, const SnapshotRef& src) {
  std::lock_guard lock(impl_->mu);
  auto& meta = impl_->table_locked(table);
  auto version = impl_->resolve_locked(src);
  if (!(version.schema == meta.schema)) {
    fail(ErrorCode::SchemaMismatch, "cannot restore '" + meta.name + "' from a table with a different schema");
  }
  impl_->flush_locked(table);
  auto mid = impl_->persist_locked(version);
  impl_->replace_current_locked(table, mid);
}

std::optional<Version> Repository::find_common_base(TableId target, const SnapshotRef& source) const {
  std::lock_guard lock(impl_->mu);
  const auto& t = impl_->table_locked(target);
  const auto& s = impl_->table_locked(source.table);
  const Lineage* l = nullptr;
  if (s.lineage && s.lineage->parent == target) {
    l = &*s.lineage;
  } else if (t.lineage && t.lineage->parent == source.table) {
    l = &*t.lineage;
  }
  if (l == nullptr || !impl_->lineage_available_locked(*l)) return std::nullopt;
  return Version{l->parent, t.schema, impl_->manifests.read(l->manifest), l->manifest};
}

CommitTs Repository::clock() const {
  std::lock_guard lock(impl_->mu);
  return impl_->catalog.clock;
}

std::optional<std::uint64_t> Repository::retention_commits() const {
  std::lock_guard lock(impl_->mu);
  return impl_->catalog.retention_commits;
}

IoStats Repository::io_stats() const {
  std::lock_guard lock(impl_->mu);
  return {impl_->store.bytes_written(), impl_->manifests.bytes_written(), impl_->catalog_bytes};
}

}  // namespace tablevc
