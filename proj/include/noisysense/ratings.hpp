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

#ifndef NOISYSENSE_RATINGS_HPP_
#define NOISYSENSE_RATINGS_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace noisysense {

using UserId = std::int32_t;
using ItemId = std::int32_t;
using Rating = int;

struct ItemRating {
  ItemId item;
  Rating rating;
  friend bool operator==(const ItemRating&, const ItemRating&) = default;
};

struct UserRating {
  UserId user;
  Rating rating;
  friend bool operator==(const UserRating&, const UserRating&) = default;
};

struct RatingTriple {
  UserId user;
  ItemId item;
  Rating rating;
  friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
  friend auto operator<=>(const RatingTriple&, const RatingTriple&) = default;
};

/// Ordered cardinal rating domain v_1 < v_2 < ... < v_m, m >= 2.
class RatingScale {
 public:
  explicit RatingScale(std::vector<Rating> values);

  /// Every integer in [lo, hi].
  static RatingScale range(Rating lo, Rating hi);

  std::size_t size() const { return values_.size(); }
  Rating min() const { return values_.front(); }
  Rating max() const { return values_.back(); }
  Rating value(std::size_t index) const { return values_[index]; }
  std::span<const Rating> values() const { return values_; }

  std::optional<std::size_t> index_of(Rating r) const;
  bool contains(Rating r) const { return index_of(r).has_value(); }
  double clamp(double v) const;

  friend bool operator==(const RatingScale&, const RatingScale&) = default;

 private:
  std::vector<Rating> values_;
};

/// Sparse N x M ratings store, immutable once built. Both the by-user and the
/// by-item index are kept in compressed-row form, sorted by id, and hold the
/// same triple set.
class RatingsMatrix {
 public:
  explicit RatingsMatrix(RatingScale scale) : scale_(std::move(scale)) {}

  /// Throws DataError on duplicate (user, item) pairs, off-scale ratings and
  /// ids outside [0, n_users) x [0, n_items).
  static RatingsMatrix from_triples(RatingScale scale, std::size_t n_users,
                                    std::size_t n_items,
                                    std::vector<RatingTriple> triples);

  const RatingScale& scale() const { return scale_; }
  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t n_ratings() const { return user_entries_.size(); }
  bool empty() const { return user_entries_.empty(); }

  std::span<const ItemRating> user_ratings(UserId user) const;
  std::span<const UserRating> item_ratings(ItemId item) const;
  std::optional<Rating> rating(UserId user, ItemId item) const;

  /// All entries ordered by (user, item).
  std::vector<RatingTriple> triples() const;

  /// Mean over every stored rating; 0 for an empty matrix.
  double mean_rating() const;

  /// Same id space and dimensions, keeping only rows of `users`.
  RatingsMatrix restricted_to_users(std::span<const UserId> users) const;

 private:
  RatingScale scale_;
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<ItemRating> user_entries_;
  std::vector<std::size_t> item_offsets_{0};
  std::vector<UserRating> item_entries_;
};

/// External id <-> dense internal id, assigned in first-seen order.
class IdMap {
 public:
  std::int32_t intern(const std::string& external);
  std::optional<std::int32_t> find(const std::string& external) const;
  const std::string& external(std::int32_t internal) const {
    return external_[static_cast<std::size_t>(internal)];
  }
  std::size_t size() const { return external_.size(); }

 private:
  std::vector<std::string> external_;
  std::unordered_map<std::string, std::int32_t> internal_;
};

struct LoadedRatings {
  RatingsMatrix matrix;
  IdMap users;
  IdMap items;
};

/// Reads delimited (user, item, rating) triples, one per line. Fields are
/// separated by whitespace or commas; trailing extra fields (timestamps) are
/// ignored. The first line may be a header. Errors carry the line number.
LoadedRatings load_ratings(std::istream& in, const RatingScale& scale);

/// Id-map sidecar: one "external<delim>internal" pair per line.
void write_id_map(std::ostream& out, const IdMap& ids, char delim = '\t');
IdMap read_id_map(std::istream& in);

/// Observed/hidden partition protocol for a test user.
struct SplitSpec {
  enum class Kind { kAllBut1, kGiven };
  Kind kind = Kind::kAllBut1;
  int given = 0;

  static SplitSpec all_but_1() { return {Kind::kAllBut1, 0}; }
  static SplitSpec given_n(int x);
  /// "AllBut1" or "GivenX" (case-insensitive).
  static SplitSpec parse(const std::string& text);
  std::string name() const;

  /// Minimum number of ratings a user needs for this protocol.
  std::size_t min_ratings() const;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct UserSplit {
  std::vector<ItemRating> observed;  // I_a, sorted by item
  std::vector<ItemRating> hidden;    // P_a, sorted by item
};

/// Random observed/hidden split of one user's ratings. Returns nullopt when
/// the user has too few ratings for `spec`. Equal seeds give equal splits.
std::optional<UserSplit> split_user(std::span<const ItemRating> user_ratings,
                                    const SplitSpec& spec, std::uint64_t seed);

/// Distribution over the scale values, indexed like RatingScale::values().
struct RatingPrior {
  RatingScale scale;
  std::vector<double> probs;

  double prob(Rating r) const;
};

/// Frequency of each scale value in `train`; add-one smoothed by default so
/// no value has zero probability. Throws DataError on an empty matrix.
RatingPrior rating_prior(const RatingsMatrix& train, bool add_one = true);

/// Weighted moments of the pair prior used as dummy observations:
/// sums of w, w*x, w*y, w*x*x, w*x*y, w*y*y and w*(y - x)^2 over all cells.
struct PairMoments {
  double w = 0, x = 0, y = 0, xx = 0, xy = 0, yy = 0, dd = 0;
};

/// m x m distribution over (x, y) rating pairs, row-major in x.
class PairPrior {
 public:
  PairPrior(RatingScale scale, std::vector<double> weights);

  const RatingScale& scale() const { return scale_; }
  double weight(std::size_t x_index, std::size_t y_index) const {
    return weights_[x_index * scale_.size() + y_index];
  }
  std::span<const double> weights() const { return weights_; }
  const PairMoments& moments() const { return moments_; }

 private:
  RatingScale scale_;
  std::vector<double> weights_;
  PairMoments moments_;
};

enum class PairPriorMode { kMarginalProduct, kEmpiricalPairs };

PairPriorMode parse_pair_prior_mode(const std::string& text);

struct PairSampling {
  std::size_t max_events = 200000;
  std::uint64_t seed = 0;
};

/// kMarginalProduct: prior(x) * prior(y) from the smoothed rating prior.
/// kEmpiricalPairs: add-one smoothed counts over a seeded sample of
/// co-rating events (two distinct users rating the same item).
PairPrior pair_prior(const RatingsMatrix& train, PairPriorMode mode,
                     const PairSampling& sampling = {});

/// Add-one smoothed normalized counts of explicit (x, y) events.
PairPrior pair_prior_from_events(
    const RatingScale& scale, std::span<const std::pair<Rating, Rating>> events);

}  // namespace noisysense

#endif  // NOISYSENSE_RATINGS_HPP_
