// Copyright (c) 2026 The noisysense Authors. All Rights Reserved
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "noisysense/ratings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string_view>

#include "noisysense/errors.hpp"
#include "noisysense/random.hpp"

namespace noisysense {

// ---------------------------------------------------------------------------
// RatingScale

RatingScale::RatingScale(std::vector<Rating> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw UsageError("rating scale needs at least two values");
  }
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] <= values_[i - 1]) {
      throw UsageError("rating scale values must be strictly increasing");
    }
  }
}

RatingScale RatingScale::range(Rating lo, Rating hi) {
  if (hi <= lo) {
    throw UsageError("rating scale bounds must satisfy min < max");
  }
  std::vector<Rating> values(static_cast<std::size_t>(hi - lo + 1));
  std::iota(values.begin(), values.end(), lo);
  return RatingScale(std::move(values));
}

std::optional<std::size_t> RatingScale::index_of(Rating r) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), r);
  if (it == values_.end() || *it != r) return std::nullopt;
  return static_cast<std::size_t>(it - values_.begin());
}

double RatingScale::clamp(double v) const {
  return std::clamp(v, static_cast<double>(min()), static_cast<double>(max()));
}

// ---------------------------------------------------------------------------
// RatingsMatrix

RatingsMatrix RatingsMatrix::from_triples(RatingScale scale, std::size_t n_users,
                                          std::size_t n_items,
                                          std::vector<RatingTriple> triples) {
  RatingsMatrix m(std::move(scale));
  m.n_users_ = n_users;
  m.n_items_ = n_items;

  for (const auto& t : triples) {
    if (t.user < 0 || static_cast<std::size_t>(t.user) >= n_users || t.item < 0 ||
        static_cast<std::size_t>(t.item) >= n_items) {
      throw DataError("rating id out of range: user " + std::to_string(t.user) +
                      ", item " + std::to_string(t.item));
    }
    if (!m.scale_.contains(t.rating)) {
      throw DataError("off-scale rating " + std::to_string(t.rating));
    }
  }
  std::sort(triples.begin(), triples.end());
  for (std::size_t i = 1; i < triples.size(); ++i) {
    if (triples[i].user == triples[i - 1].user && triples[i].item == triples[i - 1].item) {
      throw DataError("duplicate rating for user " + std::to_string(triples[i].user) +
                      ", item " + std::to_string(triples[i].item));
    }
  }

  m.user_offsets_.assign(n_users + 1, 0);
  m.item_offsets_.assign(n_items + 1, 0);
  for (const auto& t : triples) {
    ++m.user_offsets_[static_cast<std::size_t>(t.user) + 1];
    ++m.item_offsets_[static_cast<std::size_t>(t.item) + 1];
  }
  std::partial_sum(m.user_offsets_.begin(), m.user_offsets_.end(), m.user_offsets_.begin());
  std::partial_sum(m.item_offsets_.begin(), m.item_offsets_.end(), m.item_offsets_.begin());

  m.user_entries_.resize(triples.size());
  m.item_entries_.resize(triples.size());
  std::vector<std::size_t> item_fill(m.item_offsets_.begin(), m.item_offsets_.end() - 1);
  // Triples are sorted by (user, item), so each row comes out sorted by item
  // and each column sorted by user.
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    m.user_entries_[i] = {t.item, t.rating};
    m.item_entries_[item_fill[static_cast<std::size_t>(t.item)]++] = {t.user, t.rating};
  }
  return m;
}

std::span<const ItemRating> RatingsMatrix::user_ratings(UserId user) const {
  if (user < 0 || static_cast<std::size_t>(user) >= n_users_) return {};
  const auto u = static_cast<std::size_t>(user);
  return {user_entries_.data() + user_offsets_[u], user_offsets_[u + 1] - user_offsets_[u]};
}

std::span<const UserRating> RatingsMatrix::item_ratings(ItemId item) const {
  if (item < 0 || static_cast<std::size_t>(item) >= n_items_) return {};
  const auto i = static_cast<std::size_t>(item);
  return {item_entries_.data() + item_offsets_[i], item_offsets_[i + 1] - item_offsets_[i]};
}

std::optional<Rating> RatingsMatrix::rating(UserId user, ItemId item) const {
  auto row = user_ratings(user);
  auto it = std::lower_bound(row.begin(), row.end(), item,
                             [](const ItemRating& e, ItemId id) { return e.item < id; });
  if (it == row.end() || it->item != item) return std::nullopt;
  return it->rating;
}

std::vector<RatingTriple> RatingsMatrix::triples() const {
  std::vector<RatingTriple> out;
  out.reserve(n_ratings());
  for (std::size_t u = 0; u < n_users_; ++u) {
    for (const auto& e : user_ratings(static_cast<UserId>(u))) {
      out.push_back({static_cast<UserId>(u), e.item, e.rating});
    }
  }
  return out;
}

double RatingsMatrix::mean_rating() const {
  if (user_entries_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : user_entries_) sum += e.rating;
  return sum / static_cast<double>(user_entries_.size());
}

RatingsMatrix RatingsMatrix::restricted_to_users(std::span<const UserId> users) const {
  std::vector<RatingTriple> kept;
  for (UserId u : users) {
    for (const auto& e : user_ratings(u)) kept.push_back({u, e.item, e.rating});
  }
  return from_triples(scale_, n_users_, n_items_, std::move(kept));
}

// ---------------------------------------------------------------------------
// Loading

std::int32_t IdMap::intern(const std::string& external) {
  auto [it, inserted] =
      internal_.try_emplace(external, static_cast<std::int32_t>(external_.size()));
  if (inserted) external_.push_back(external);
  return it->second;
}

std::optional<std::int32_t> IdMap::find(const std::string& external) const {
  auto it = internal_.find(external);
  if (it == internal_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  auto is_sep = [](char c) {
    return c == ',' || std::isspace(static_cast<unsigned char>(c));
  };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_sep(line[i])) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

std::optional<Rating> parse_rating(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value) || value != std::floor(value)) return std::nullopt;
  return static_cast<Rating>(value);
}

}  // namespace

LoadedRatings load_ratings(std::istream& in, const RatingScale& scale) {
  LoadedRatings out{RatingsMatrix(scale), {}, {}};
  std::vector<RatingTriple> triples;
  std::string line;
  std::size_t line_no = 0;
  bool seen_record = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() < 3) {
      if (!seen_record && line_no == 1) continue;  // header
      throw DataError(where + "expected user, item, rating");
    }
    auto rating = parse_rating(fields[2]);
    if (!rating) {
      if (!seen_record && line_no == 1) continue;  // header
      throw DataError(where + "malformed rating '" + std::string(fields[2]) + "'");
    }
    if (!scale.contains(*rating)) {
      throw DataError(where + "rating " + std::to_string(*rating) + " is off the " +
                      std::to_string(scale.min()) + ".." + std::to_string(scale.max()) +
                      " scale");
    }
    seen_record = true;
    triples.push_back({out.users.intern(std::string(fields[0])),
                       out.items.intern(std::string(fields[1])), *rating});
  }

  // Re-check duplicates here so the error names the external ids.
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(triples[a].user, triples[a].item) < std::tie(triples[b].user, triples[b].item);
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& a = triples[order[k - 1]];
    const auto& b = triples[order[k]];
    if (a.user == b.user && a.item == b.item) {
      throw DataError("duplicate rating for user '" + out.users.external(a.user) +
                      "', item '" + out.items.external(a.item) + "'");
    }
  }

  out.matrix = RatingsMatrix::from_triples(scale, out.users.size(), out.items.size(),
                                           std::move(triples));
  return out;
}

void write_id_map(std::ostream& out, const IdMap& ids, char delim) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids.external(static_cast<std::int32_t>(i)) << delim << i << '\n';
  }
}

IdMap read_id_map(std::istream& in) {
  IdMap ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    std::int32_t internal = -1;
    if (fields.size() != 2 ||
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), internal).ec !=
            std::errc()) {
      throw DataError("id map line " + std::to_string(line_no) + ": malformed");
    }
    if (ids.intern(std::string(fields[0])) != internal) {
      throw DataError("id map line " + std::to_string(line_no) + ": ids not contiguous");
    }
  }
  return ids;
}

// ---------------------------------------------------------------------------
// Splitting

SplitSpec SplitSpec::given_n(int x) {
  if (x < 1) throw UsageError("GivenX protocol needs X >= 1");
  return {Kind::kGiven, x};
}

SplitSpec SplitSpec::parse(const std::string& text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "allbut1") return all_but_1();
  if (lower.rfind("given", 0) == 0 && lower.size() > 5) {
    int x = 0;
    auto digits = std::string_view(lower).substr(5);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), x);
    if (ec == std::errc() && ptr == digits.data() + digits.size()) return given_n(x);
  }
  throw UsageError("unknown protocol '" + text + "' (expected AllBut1 or GivenX)");
}

std::string SplitSpec::name() const {
  return kind == Kind::kAllBut1 ? "AllBut1" : "Given" + std::to_string(given);
}

std::size_t SplitSpec::min_ratings() const {
  return kind == Kind::kAllBut1 ? 2 : static_cast<std::size_t>(given) + 1;
}

std::optional<UserSplit> split_user(std::span<const ItemRating> user_ratings,
                                    const SplitSpec& spec, std::uint64_t seed) {
  const std::size_t n = user_ratings.size();
  if (n < spec.min_ratings()) return std::nullopt;

  // Partial Fisher-Yates: the first `take` slots of `order` are a uniformly
  // random subset.
  const std::size_t take = spec.kind == SplitSpec::Kind::kAllBut1
                               ? 1
                               : static_cast<std::size_t>(spec.given);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> chosen(n, false);
  for (std::size_t i = 0; i < take; ++i) chosen[order[i]] = true;

  const bool chosen_are_hidden = spec.kind == SplitSpec::Kind::kAllBut1;
  UserSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    const bool hidden = chosen[i] == chosen_are_hidden;
    (hidden ? split.hidden : split.observed).push_back(user_ratings[i]);
  }
  auto by_item = [](const ItemRating& a, const ItemRating& b) { return a.item < b.item; };
  std::sort(split.observed.begin(), split.observed.end(), by_item);
  std::sort(split.hidden.begin(), split.hidden.end(), by_item);
  return split;
}

// ---------------------------------------------------------------------------
// Priors

double RatingPrior::prob(Rating r) const {
  auto idx = scale.index_of(r);
  return idx ? probs[*idx] : 0.0;
}

RatingPrior rating_prior(const RatingsMatrix& train, bool add_one) {
  if (train.empty()) throw DataError("rating prior needs a non-empty training matrix");
  const auto& scale = train.scale();
  std::vector<double> counts(scale.size(), add_one ? 1.0 : 0.0);
  for (const auto& t : train.triples()) counts[*scale.index_of(t.rating)] += 1.0;
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (auto& c : counts) c /= total;
  return {scale, std::move(counts)};
}

PairPrior::PairPrior(RatingScale scale, std::vector<double> weights)
    : scale_(std::move(scale)), weights_(std::move(weights)) {
  const std::size_t m = scale_.size();
  if (weights_.size() != m * m) throw UsageError("pair prior needs m*m weights");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw UsageError("pair prior weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw UsageError("pair prior has no mass");
  for (auto& w : weights_) w /= total;

  for (std::size_t xi = 0; xi < m; ++xi) {
    const double x = scale_.value(xi);
    for (std::size_t yi = 0; yi < m; ++yi) {
      const double y = scale_.value(yi);
      const double w = weights_[xi * m + yi];
      moments_.w += w;
      moments_.x += w * x;
      moments_.y += w * y;
      moments_.xx += w * x * x;
      moments_.xy += w * x * y;
      moments_.yy += w * y * y;
      moments_.dd += w * (y - x) * (y - x);
    }
  }
}

PairPriorMode parse_pair_prior_mode(const std::string& text) {
  if (text == "marginal-product") return PairPriorMode::kMarginalProduct;
  if (text == "empirical-pairs") return PairPriorMode::kEmpiricalPairs;
  throw UsageError("unknown pair prior mode '" + text +
                   "' (expected marginal-product or empirical-pairs)");
}

PairPrior pair_prior_from_events(const RatingScale& scale,
                                 std::span<const std::pair<Rating, Rating>> events) {
  const std::size_t m = scale.size();
  std::vector<double> counts(m * m, 1.0);
  for (const auto& [x, y] : events) {
    auto xi = scale.index_of(x);
    auto yi = scale.index_of(y);
    if (!xi || !yi) throw DataError("pair event off the rating scale");
    counts[*xi * m + *yi] += 1.0;
  }
  return PairPrior(scale, std::move(counts));
}

PairPrior pair_prior(const RatingsMatrix& train, PairPriorMode mode,
                     const PairSampling& sampling) {
  if (train.empty()) throw DataError("pair prior needs a non-empty training matrix");
  const auto& scale = train.scale();
  const std::size_t m = scale.size();

  if (mode == PairPriorMode::kMarginalProduct) {
    const RatingPrior marginal = rating_prior(train, true);
    std::vector<double> weights(m * m);
    for (std::size_t xi = 0; xi < m; ++xi) {
      for (std::size_t yi = 0; yi < m; ++yi) {
        weights[xi * m + yi] = marginal.probs[xi] * marginal.probs[yi];
      }
    }
    return PairPrior(scale, std::move(weights));
  }

  // A co-rating event: a uniformly drawn rating (u, i) paired with a second,
  // distinct rater of item i. Items with a single rater yield no event.
  const auto triples = train.triples();
  std::vector<std::pair<Rating, Rating>> events;
  events.reserve(sampling.max_events);
  Rng rng(derive_seed(sampling.seed, "pair-prior"));
  const std::size_t attempts = sampling.max_events * 4;
  for (std::size_t a = 0; a < attempts && events.size() < sampling.max_events; ++a) {
    const auto& t = triples[uniform_index(rng, triples.size())];
    auto raters = train.item_ratings(t.item);
    if (raters.size() < 2) continue;
    const auto& other = raters[uniform_index(rng, raters.size())];
    if (other.user == t.user) continue;
    events.emplace_back(t.rating, other.rating);
  }
  return pair_prior_from_events(scale, events);
}

}  // namespace noisysense
