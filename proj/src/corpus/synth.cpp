#include "dualoop/corpus/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dualoop {

std::string to_string(Reordering r) {
  switch (r) {
    case Reordering::Reverse: return "reverse";
    case Reordering::RotateK: return "rotate-k";
    case Reordering::SwapAdjacent: return "swap-adjacent";
  }
  return "reverse";
}

Reordering parse_reordering(std::string_view s) {
  if (s == "reverse") return Reordering::Reverse;
  if (s == "rotate-k") return Reordering::RotateK;
  if (s == "swap-adjacent") return Reordering::SwapAdjacent;
  throw std::invalid_argument("unknown reordering '" + std::string(s) +
                              "' (expected reverse, rotate-k or swap-adjacent)");
}

void SynthLangSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("synthetic spec: " + msg); };
  if (vocab_size < 2) fail("vocab_size must be >= 2");
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) fail("noise_rate must be in [0, 1)");
  if (min_len < 1 || max_len < min_len) fail("need 1 <= min_len <= max_len");
  if (!(geometric_p > 0.0 && geometric_p <= 1.0)) fail("geometric_p must be in (0, 1]");
  if (successors < 1 || successors > vocab_size) fail("successors must be in [1, vocab_size]");
  if (context_classes < 1) fail("context_classes must be >= 1");
  if (n_bilingual < 1) fail("n_bilingual must be >= 1");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> dirichlet_ones(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = -std::log1p(-rng.uniform());
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

}  // namespace

std::string spec_to_text(const SynthLangSpec& s) {
  std::ostringstream os;
  os << "vocab_size=" << s.vocab_size << '\n'
     << "bijection_seed=" << s.bijection_seed << '\n'
     << "reordering=" << to_string(s.reordering) << '\n'
     << "rotate_k=" << s.rotate_k << '\n'
     << "noise_rate=" << format_double(s.noise_rate) << '\n'
     << "min_len=" << s.min_len << '\n'
     << "max_len=" << s.max_len << '\n'
     << "geometric_p=" << format_double(s.geometric_p) << '\n'
     << "n_bilingual=" << s.n_bilingual << '\n'
     << "n_mono_a=" << s.n_mono_a << '\n'
     << "n_mono_b=" << s.n_mono_b << '\n'
     << "n_valid=" << s.n_valid << '\n'
     << "n_test=" << s.n_test << '\n'
     << "successors=" << s.successors << '\n'
     << "context_classes=" << s.context_classes << '\n';
  return os.str();
}

SynthLangSpec spec_from_text(const std::string& text) {
  SynthLangSpec s;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("synthetic spec: bad line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    auto as_size = [&] { return static_cast<std::size_t>(std::stoull(val)); };
    if (key == "vocab_size") s.vocab_size = as_size();
    else if (key == "bijection_seed") s.bijection_seed = std::stoull(val);
    else if (key == "reordering") s.reordering = parse_reordering(val);
    else if (key == "rotate_k") s.rotate_k = as_size();
    else if (key == "noise_rate") s.noise_rate = std::stod(val);
    else if (key == "min_len") s.min_len = as_size();
    else if (key == "max_len") s.max_len = as_size();
    else if (key == "geometric_p") s.geometric_p = std::stod(val);
    else if (key == "n_bilingual") s.n_bilingual = as_size();
    else if (key == "n_mono_a") s.n_mono_a = as_size();
    else if (key == "n_mono_b") s.n_mono_b = as_size();
    else if (key == "n_valid") s.n_valid = as_size();
    else if (key == "n_test") s.n_test = as_size();
    else if (key == "successors") s.successors = as_size();
    else if (key == "context_classes") s.context_classes = as_size();
    else throw std::invalid_argument("synthetic spec: unknown key '" + key + "'");
  }
  s.validate();
  return s;
}

std::vector<std::size_t> reorder_positions(std::size_t n, Reordering r, std::size_t k) {
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (r) {
      case Reordering::Reverse: pos[i] = n - 1 - i; break;
      case Reordering::RotateK: pos[i] = (i + k) % n; break;
      case Reordering::SwapAdjacent: pos[i] = (i ^ 1U) < n ? (i ^ 1U) : i; break;
    }
  }
  return pos;
}

GroundTruthMap::GroundTruthMap(std::vector<std::string> a_tokens, std::vector<std::string> b_tokens,
                               Reordering reordering, std::size_t rotate_k)
    : a_tokens_(std::move(a_tokens)),
      b_tokens_(std::move(b_tokens)),
      reordering_(reordering),
      rotate_k_(rotate_k) {
  if (a_tokens_.size() != b_tokens_.size()) {
    throw std::invalid_argument("ground-truth map: token lists differ in length");
  }
  for (std::size_t i = 0; i < a_tokens_.size(); ++i) {
    if (!ab_.emplace(a_tokens_[i], b_tokens_[i]).second ||
        !ba_.emplace(b_tokens_[i], a_tokens_[i]).second) {
      throw std::invalid_argument("ground-truth map is not a bijection at " + a_tokens_[i]);
    }
  }
}

std::vector<std::string> GroundTruthMap::a_to_b(const std::vector<std::string>& a) const {
  std::vector<std::string> mapped;
  mapped.reserve(a.size());
  for (const auto& t : a) {
    auto it = ab_.find(t);
    mapped.push_back(it == ab_.end() ? std::string(kUnkToken) : it->second);
  }
  return apply_reordering(mapped, reordering_, rotate_k_);
}

std::vector<std::string> GroundTruthMap::b_to_a(const std::vector<std::string>& b) const {
  std::vector<std::string> mapped;
  mapped.reserve(b.size());
  for (const auto& t : b) {
    auto it = ba_.find(t);
    mapped.push_back(it == ba_.end() ? std::string(kUnkToken) : it->second);
  }
  return invert_reordering(mapped, reordering_, rotate_k_);
}

namespace {

std::vector<std::string> to_tokens(const Sentence& s, const Vocabulary& v) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (TokenId id : s) out.push_back(v.token(id));
  return out;
}

}  // namespace

Sentence GroundTruthMap::a_to_b(const Sentence& a, const Vocabulary& va, const Vocabulary& vb) const {
  return encode_tokens(vb, a_to_b(to_tokens(a, va)));
}

Sentence GroundTruthMap::b_to_a(const Sentence& b, const Vocabulary& va, const Vocabulary& vb) const {
  return encode_tokens(va, b_to_a(to_tokens(b, vb)));
}

std::string GroundTruthMap::to_tsv() const {
  std::ostringstream os;
  os << "# reordering=" << to_string(reordering_) << " rotate_k=" << rotate_k_ << '\n';
  for (std::size_t i = 0; i < a_tokens_.size(); ++i) os << a_tokens_[i] << '\t' << b_tokens_[i] << '\n';
  return os.str();
}

GroundTruthMap GroundTruthMap::from_tsv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Reordering reordering = Reordering::Reverse;
  std::size_t k = 1;
  std::vector<std::string> a, b;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      for (const auto& field : split_tokens(line.substr(1))) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        if (field.substr(0, eq) == "reordering") reordering = parse_reordering(field.substr(eq + 1));
        if (field.substr(0, eq) == "rotate_k") k = std::stoull(field.substr(eq + 1));
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::invalid_argument("ground-truth map: bad line '" + line + "'");
    a.push_back(line.substr(0, tab));
    b.push_back(line.substr(tab + 1));
  }
  return GroundTruthMap(std::move(a), std::move(b), reordering, k);
}

MarkovSource::MarkovSource(const SynthLangSpec& spec, std::uint64_t seed)
    : vocab_(spec.vocab_size), classes_(spec.context_classes), min_len_(spec.min_len) {
  spec.validate();
  Rng rng = Rng(seed).split("markov");
  double total = 0.0;
  for (std::size_t len = spec.min_len; len <= spec.max_len; ++len) {
    const double p = spec.geometric_p * std::pow(1.0 - spec.geometric_p, double(len - spec.min_len));
    length_probs_.push_back(p);
    total += p;
  }
  for (auto& p : length_probs_) p /= total;

  start_ = dirichlet_ones(vocab_, rng);
  succ_.resize(vocab_);
  std::vector<std::size_t> all(vocab_);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t v = 0; v < vocab_; ++v) {
    // partial Fisher-Yates for a successor set without replacement
    for (std::size_t i = 0; i < spec.successors; ++i) {
      const auto j = i + rng.below(vocab_ - i);
      std::swap(all[i], all[j]);
    }
    succ_[v].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.successors));
    std::sort(succ_[v].begin(), succ_[v].end());
  }
  wts_.resize(classes_ + 1);
  for (auto& per_class : wts_) {
    per_class.resize(vocab_);
    for (auto& w : per_class) w = dirichlet_ones(spec.successors, rng);
  }
}

std::size_t MarkovSource::context_class(std::size_t prev2, bool at_start) const {
  return at_start ? classes_ : prev2 % classes_;
}

std::vector<std::size_t> MarkovSource::sample(Rng& rng) const {
  const std::size_t len = min_len_ + rng.categorical(length_probs_);
  std::vector<std::size_t> s;
  s.reserve(len);
  s.push_back(rng.categorical(start_));
  for (std::size_t t = 1; t < len; ++t) {
    const bool at_start = t == 1;
    const std::size_t prev2 = at_start ? 0 : s[t - 2];
    const auto& weights = wts_[context_class(prev2, at_start)][s[t - 1]];
    s.push_back(succ_[s[t - 1]][rng.categorical(weights)]);
  }
  return s;
}

double MarkovSource::length_prob(std::size_t len) const {
  if (len < min_len_ || len - min_len_ >= length_probs_.size()) return 0.0;
  return length_probs_[len - min_len_];
}

double MarkovSource::next_prob(std::size_t prev2, bool at_start, std::size_t prev1,
                               std::size_t next) const {
  const auto& succ = succ_[prev1];
  auto it = std::lower_bound(succ.begin(), succ.end(), next);
  if (it == succ.end() || *it != next) return 0.0;
  return wts_[context_class(prev2, at_start)][prev1][static_cast<std::size_t>(it - succ.begin())];
}

double MarkovSource::log_prob(const std::vector<std::size_t>& s) const {
  if (s.empty()) return -std::numeric_limits<double>::infinity();
  double lp = std::log(length_prob(s.size())) + std::log(start_[s[0]]);
  for (std::size_t t = 1; t < s.size(); ++t) {
    const bool at_start = t == 1;
    lp += std::log(next_prob(at_start ? 0 : s[t - 2], at_start, s[t - 1], s[t]));
  }
  return lp;
}

double MarkovSource::support_size(double cap) const {
  double total = 0.0;
  const double m = static_cast<double>(succ_.empty() ? 0 : succ_[0].size());
  for (std::size_t i = 0; i < length_probs_.size(); ++i) {
    total += static_cast<double>(vocab_) * std::pow(m, double(min_len_ + i - 1));
    if (total >= cap) return cap;
  }
  return total;
}

std::string a_token(std::size_t i) { return "a" + std::to_string(i); }
std::string b_token(std::size_t i) { return "b" + std::to_string(i); }

namespace {

using IndexSentence = std::vector<std::size_t>;

std::vector<std::string> index_tokens(const IndexSentence& s, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (auto i : s) out.push_back(names[i]);
  return out;
}

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace

SynthData gen_language_pair(const SynthLangSpec& spec, std::uint64_t seed) {
  spec.validate();
  const MarkovSource source(spec, seed);
  Rng root(seed);
  Rng sent_rng = root.split("sentences");
  Rng noise_rng = root.split("noise");

  std::vector<std::string> a_names(spec.vocab_size), b_names(spec.vocab_size);
  std::vector<std::size_t> perm(spec.vocab_size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng(spec.bijection_seed).split("bijection").shuffle(perm.begin(), perm.end());
  for (std::size_t i = 0; i < spec.vocab_size; ++i) {
    a_names[i] = a_token(i);
    b_names[i] = b_token(perm[i]);
  }
  GroundTruthMap map(a_names, b_names, spec.reordering, spec.rotate_k);

  auto to_b = [&](const IndexSentence& a) {
    auto b = map.a_to_b(index_tokens(a, a_names));
    for (auto& tok : b) {
      if (noise_rng.bernoulli(spec.noise_rate)) tok = b_token(noise_rng.below(spec.vocab_size));
    }
    return b;
  };

  const std::size_t reserved_needed = spec.n_bilingual + spec.n_valid + spec.n_test;
  const double capacity = source.support_size();
  if (static_cast<double>(reserved_needed) >= capacity) {
    throw std::invalid_argument("synthetic spec: " + std::to_string(reserved_needed) +
                                " distinct bilingual/valid/test sentences requested but only " +
                                format_double(capacity) + " exist at lengths " +
                                std::to_string(spec.min_len) + "-" + std::to_string(spec.max_len));
  }
  const std::size_t max_attempts = 100 * (reserved_needed + spec.n_mono_a + spec.n_mono_b) + 100000;
  std::size_t attempts = 0;
  auto draw = [&] {
    if (++attempts > max_attempts) {
      throw std::runtime_error("synthetic generator: exceeded " + std::to_string(max_attempts) +
                               " draws; corpus sizes too large for the source distribution");
    }
    return source.sample(sent_rng);
  };

  std::set<IndexSentence> reserved_a;
  std::vector<IndexSentence> reserved;
  while (reserved.size() < reserved_needed) {
    auto s = draw();
    if (reserved_a.insert(s).second) reserved.push_back(std::move(s));
  }
  std::vector<std::vector<std::string>> reserved_b;
  std::set<std::vector<std::string>> reserved_b_set;
  for (const auto& a : reserved) {
    reserved_b.push_back(to_b(a));
    reserved_b_set.insert(reserved_b.back());
  }

  std::vector<std::string> raw_a, raw_b;
  for (std::size_t i = 0; i < spec.n_bilingual; ++i) {
    raw_a.push_back(join(index_tokens(reserved[i], a_names)));
    raw_b.push_back(join(reserved_b[i]));
  }

  SynthData data;
  data.vocab_a = build_vocab(raw_a, spec.vocab_size);
  data.vocab_b = build_vocab(raw_b, spec.vocab_size);
  data.map = map;

  auto make_pairs = [&](std::size_t begin, std::size_t end) {
    BilingualCorpus c;
    for (std::size_t i = begin; i < end; ++i) {
      c.pairs.push_back({encode_tokens(data.vocab_a, index_tokens(reserved[i], a_names)),
                         encode_tokens(data.vocab_b, reserved_b[i])});
    }
    return c;
  };
  data.train = make_pairs(0, spec.n_bilingual);
  data.valid = make_pairs(spec.n_bilingual, spec.n_bilingual + spec.n_valid);
  data.test = make_pairs(spec.n_bilingual + spec.n_valid, reserved_needed);

  data.mono_a.language = "A";
  while (data.mono_a.size() < spec.n_mono_a) {
    auto s = draw();
    if (reserved_a.contains(s)) continue;
    data.mono_a.sentences.push_back(encode_tokens(data.vocab_a, index_tokens(s, a_names)));
  }
  data.mono_b.language = "B";
  while (data.mono_b.size() < spec.n_mono_b) {
    auto s = draw();
    if (reserved_a.contains(s)) continue;
    auto b = to_b(s);
    if (reserved_b_set.contains(b)) continue;
    data.mono_b.sentences.push_back(encode_tokens(data.vocab_b, b));
  }
  data.mono_a = filter_corpus(data.mono_a, spec.max_len, true);
  data.mono_b = filter_corpus(data.mono_b, spec.max_len, true);
  return data;
}

}  // namespace dualoop
