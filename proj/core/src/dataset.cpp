#include "pnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pnn/errors.hpp"
#include "pnn/rng.hpp"

namespace pnn {

namespace {

constexpr std::string_view kSnapshotMagic = "#pnn-dataset v1";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

std::int64_t parse_int64(std::string_view s, std::size_t line_no,
                         const char* what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(std::string("cannot parse ") + what + " from '" +
                         std::string(s) + "'",
                     line_no);
  }
  return v;
}

bool interaction_key_less(const Interaction& a, const Interaction& b) {
  if (a.user != b.user) return a.user < b.user;
  return a.item < b.item;
}

void sort_partition(std::vector<Interaction>& part) {
  std::sort(part.begin(), part.end(), interaction_key_less);
}

}  // namespace

bool InteractionDataset::is_train_positive(UserId u, ItemId i) const {
  const auto& pos = user_pos_index[static_cast<std::size_t>(u)];
  return std::binary_search(pos.begin(), pos.end(), i);
}

void InteractionDataset::rebuild_user_pos_index() {
  user_pos_index.assign(static_cast<std::size_t>(num_users), {});
  for (const auto& x : train) {
    user_pos_index[static_cast<std::size_t>(x.user)].push_back(x.item);
  }
  for (auto& items : user_pos_index) {
    std::sort(items.begin(), items.end());
  }
}

ColumnFormat ColumnFormat::parse(const std::string& descriptor) {
  ColumnFormat fmt;
  fmt.user_col = fmt.item_col = fmt.time_col = -1;
  for (std::size_t c = 0; c < descriptor.size(); ++c) {
    switch (descriptor[c]) {
      case 'u':
        if (fmt.user_col >= 0) throw ConfigError("duplicate 'u' in format descriptor");
        fmt.user_col = static_cast<int>(c);
        break;
      case 'i':
        if (fmt.item_col >= 0) throw ConfigError("duplicate 'i' in format descriptor");
        fmt.item_col = static_cast<int>(c);
        break;
      case 't':
        if (fmt.time_col >= 0) throw ConfigError("duplicate 't' in format descriptor");
        fmt.time_col = static_cast<int>(c);
        break;
      case 'x':
        break;
      default:
        throw ConfigError("format descriptor may only contain u, i, t, x: '" +
                          descriptor + "'");
    }
  }
  if (fmt.user_col < 0 || fmt.item_col < 0) {
    throw ConfigError("format descriptor needs both 'u' and 'i': '" +
                      descriptor + "'");
  }
  return fmt;
}

InteractionDataset ingest(const std::string& path, const ColumnFormat& fmt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input file: " + path);

  InteractionDataset ds;
  // (user << 32 | item) -> index into ds.train, for duplicate collapsing.
  std::unordered_map<std::uint64_t, std::size_t> seen;

  const int required = std::max(fmt.user_col, fmt.item_col);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (static_cast<int>(fields.size()) <= required) {
      throw ParseError("expected at least " + std::to_string(required + 1) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);
    }

    const std::string raw_user(fields[static_cast<std::size_t>(fmt.user_col)]);
    const std::string raw_item(fields[static_cast<std::size_t>(fmt.item_col)]);
    std::int64_t ts = kNoTimestamp;
    if (fmt.time_col >= 0 &&
        static_cast<std::size_t>(fmt.time_col) < fields.size()) {
      ts = parse_int64(fields[static_cast<std::size_t>(fmt.time_col)], line_no,
                       "timestamp");
    }

    auto [uit, uinserted] = ds.ids.user_dense.try_emplace(
        raw_user, static_cast<UserId>(ds.ids.user_raw.size()));
    if (uinserted) ds.ids.user_raw.push_back(raw_user);
    auto [iit, iinserted] = ds.ids.item_dense.try_emplace(
        raw_item, static_cast<ItemId>(ds.ids.item_raw.size()));
    if (iinserted) ds.ids.item_raw.push_back(raw_item);

    const UserId u = uit->second;
    const ItemId i = iit->second;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
        static_cast<std::uint32_t>(i);
    auto [sit, sinserted] = seen.try_emplace(key, ds.train.size());
    if (sinserted) {
      ds.train.push_back(Interaction{u, i, ts});
    } else {
      // Keep the earliest timestamp; absent timestamps never displace one.
      Interaction& prev = ds.train[sit->second];
      if (ts != kNoTimestamp &&
          (prev.timestamp == kNoTimestamp || ts < prev.timestamp)) {
        prev.timestamp = ts;
      }
    }
  }

  if (ds.train.empty()) throw DataError("no interactions found in " + path);
  ds.num_users = static_cast<std::int64_t>(ds.ids.user_raw.size());
  ds.num_items = static_cast<std::int64_t>(ds.ids.item_raw.size());
  ds.rebuild_user_pos_index();
  return ds;
}

InteractionDataset split(InteractionDataset ds, const SplitRatios& ratios,
                         std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.validation > 0.0 && ratios.test > 0.0)) {
    throw ConfigError("split ratios must all be positive");
  }
  if (std::fabs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  if (ds.is_split) throw ConfigError("dataset is already split");

  std::vector<std::vector<Interaction>> per_user(
      static_cast<std::size_t>(ds.num_users));
  for (const auto& x : ds.train) {
    per_user[static_cast<std::size_t>(x.user)].push_back(x);
  }

  std::vector<Interaction> train, validation, test;
  train.reserve(ds.train.size());
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto& rows = per_user[u];
    // Canonical pre-shuffle order, so results do not depend on file order.
    sort_partition(rows);
    auto rng = make_rng(seed, 0x73706c74ULL, u);  // "splt"
    std::shuffle(rows.begin(), rows.end(), rng);

    const auto n = rows.size();
    const auto n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * ratios.validation));
    const auto n_test = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * ratios.test));
    const auto n_train = n - n_val - n_test;  // remainder stays in train

    for (std::size_t k = 0; k < n; ++k) {
      if (k < n_train) {
        train.push_back(rows[k]);
      } else if (k < n_train + n_val) {
        validation.push_back(rows[k]);
      } else {
        test.push_back(rows[k]);
      }
    }
  }

  sort_partition(train);
  sort_partition(validation);
  sort_partition(test);
  ds.train = std::move(train);
  ds.validation = std::move(validation);
  ds.test = std::move(test);
  ds.is_split = true;
  ds.ratios = ratios;
  ds.split_seed = seed;
  ds.rebuild_user_pos_index();
  return ds;
}

std::pair<InteractionDataset, NoiseLedger> inject_noise(InteractionDataset ds,
                                                        double fraction,
                                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("noise fraction must lie strictly inside (0, 1)");
  }
  const auto n = ds.train.size();
  const auto k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto rng = make_rng(seed, 0x6e6f6973ULL);  // "nois"
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<char> remove(n, 0);
  NoiseLedger ledger;
  ledger.fraction = fraction;
  ledger.seed = seed;
  ledger.flipped.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    remove[order[i]] = 1;
    ledger.flipped.emplace_back(ds.train[order[i]].user, ds.train[order[i]].item);
  }
  std::sort(ledger.flipped.begin(), ledger.flipped.end());

  std::vector<Interaction> kept;
  kept.reserve(n - k);
  for (std::size_t i = 0; i < n; ++i) {
    if (!remove[i]) kept.push_back(ds.train[i]);
  }
  ds.train = std::move(kept);
  ds.rebuild_user_pos_index();
  return {std::move(ds), std::move(ledger)};
}

std::string NoiseLedger::to_json() const {
  nlohmann::ordered_json j;
  j["fraction"] = fraction;
  j["seed"] = seed;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [u, i] : flipped) arr.push_back({u, i});
  j["flipped"] = std::move(arr);
  return j.dump();
}

NoiseLedger NoiseLedger::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NoiseLedger ledger;
  ledger.fraction = j.at("fraction").get<double>();
  ledger.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& pair : j.at("flipped")) {
    ledger.flipped.emplace_back(pair.at(0).get<UserId>(),
                                pair.at(1).get<ItemId>());
  }
  return ledger;
}

namespace {

void write_partition(std::ostream& out, const char* name,
                     const std::vector<Interaction>& part) {
  out << name << ' ' << part.size() << '\n';
  for (const auto& x : part) {
    out << x.user << '\t' << x.item << '\t' << x.timestamp << '\n';
  }
}

}  // namespace

void save_dataset(const InteractionDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw ConfigError("cannot open snapshot for writing: " + path);
  out << kSnapshotMagic << '\n';
  out << "users " << ds.num_users << '\n';
  out << "items " << ds.num_items << '\n';
  char ratio_buf[128];
  std::snprintf(ratio_buf, sizeof(ratio_buf), "%.17g %.17g %.17g", ds.ratios.train,
                ds.ratios.validation, ds.ratios.test);
  out << "split " << (ds.is_split ? 1 : 0) << ' ' << ds.split_seed << ' '
      << ratio_buf << '\n';
  out << "user_ids " << ds.ids.user_raw.size() << '\n';
  for (const auto& raw : ds.ids.user_raw) out << raw << '\n';
  out << "item_ids " << ds.ids.item_raw.size() << '\n';
  for (const auto& raw : ds.ids.item_raw) out << raw << '\n';
  write_partition(out, "train", ds.train);
  write_partition(out, "validation", ds.validation);
  write_partition(out, "test", ds.test);
  if (!out) throw DataError("failed writing snapshot: " + path);
}

namespace {

std::string expect_line(std::istream& in, std::size_t& line_no) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("unexpected end of snapshot", line_no);
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::int64_t expect_count(std::istream& in, std::size_t& line_no,
                          const std::string& keyword) {
  const std::string line = expect_line(in, line_no);
  const auto fields = split_fields(line);
  if (fields.size() < 2 || fields[0] != keyword) {
    throw ParseError("expected '" + keyword + " <n>'", line_no);
  }
  return parse_int64(fields[1], line_no, keyword.c_str());
}

std::vector<Interaction> read_partition(std::istream& in, std::size_t& line_no,
                                        const std::string& keyword) {
  const auto count = expect_count(in, line_no, keyword);
  std::vector<Interaction> part;
  part.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    const std::string line = expect_line(in, line_no);
    const auto fields = split_fields(line);
    if (fields.size() != 3) throw ParseError("expected 'user item ts'", line_no);
    Interaction x;
    x.user = static_cast<UserId>(parse_int64(fields[0], line_no, "user"));
    x.item = static_cast<ItemId>(parse_int64(fields[1], line_no, "item"));
    x.timestamp = parse_int64(fields[2], line_no, "timestamp");
    part.push_back(x);
  }
  return part;
}

}  // namespace

InteractionDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open snapshot: " + path);
  std::size_t line_no = 0;

  const std::string magic = expect_line(in, line_no);
  if (magic != kSnapshotMagic) {
    throw DataError("not a pnn dataset snapshot (bad header): " + path);
  }

  InteractionDataset ds;
  ds.num_users = expect_count(in, line_no, "users");
  ds.num_items = expect_count(in, line_no, "items");

  {
    const std::string line = expect_line(in, line_no);
    const auto fields = split_fields(line);
    if (fields.size() != 6 || fields[0] != "split") {
      throw ParseError("expected 'split <flag> <seed> <r> <r> <r>'", line_no);
    }
    ds.is_split = parse_int64(fields[1], line_no, "split flag") != 0;
    ds.split_seed = static_cast<std::uint64_t>(
        parse_int64(fields[2], line_no, "split seed"));
    ds.ratios.train = std::strtod(std::string(fields[3]).c_str(), nullptr);
    ds.ratios.validation = std::strtod(std::string(fields[4]).c_str(), nullptr);
    ds.ratios.test = std::strtod(std::string(fields[5]).c_str(), nullptr);
  }

  const auto n_users = expect_count(in, line_no, "user_ids");
  ds.ids.user_raw.reserve(static_cast<std::size_t>(n_users));
  for (std::int64_t k = 0; k < n_users; ++k) {
    const std::string raw = expect_line(in, line_no);
    ds.ids.user_dense.emplace(raw, static_cast<UserId>(ds.ids.user_raw.size()));
    ds.ids.user_raw.push_back(raw);
  }
  const auto n_items = expect_count(in, line_no, "item_ids");
  ds.ids.item_raw.reserve(static_cast<std::size_t>(n_items));
  for (std::int64_t k = 0; k < n_items; ++k) {
    const std::string raw = expect_line(in, line_no);
    ds.ids.item_dense.emplace(raw, static_cast<ItemId>(ds.ids.item_raw.size()));
    ds.ids.item_raw.push_back(raw);
  }

  ds.train = read_partition(in, line_no, "train");
  ds.validation = read_partition(in, line_no, "validation");
  ds.test = read_partition(in, line_no, "test");
  ds.rebuild_user_pos_index();
  return ds;
}

}  // namespace pnn
