#include "f2ocl/encoder.hpp"

#include <cmath>
#include <cstring>

#include "f2ocl/errors.hpp"
#include "f2ocl/rng.hpp"

namespace f2ocl {

namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr double kWeightStd = 0.02;

// rng stream tags for frozen weights
constexpr std::uint64_t kTokenizerStream = 0x10;
constexpr std::uint64_t kAffineStream = 0x30;
constexpr std::uint64_t kBlockStreamBase = 0x20;

void fill_gaussian(Matrix& m, CounterRng& rng, double stddev) {
  for (double& v : m.data) v = rng.next_gaussian(stddev);
}

Matrix seeded_matrix(std::uint64_t seed, std::uint64_t stream, std::size_t rows,
                     std::size_t cols) {
  Matrix m(rows, cols);
  CounterRng rng(seed, stream);
  fill_gaussian(m, rng, kWeightStd);
  return m;
}

double gelu(double u) { return 0.5 * u * (1.0 + std::erf(u * M_SQRT1_2)); }

double gelu_grad(double u) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599344;
  return 0.5 * (1.0 + std::erf(u * M_SQRT1_2)) + u * inv_sqrt_2pi * std::exp(-0.5 * u * u);
}

// In-place row layer norm (no affine parameters); returns 1/std per row.
void layer_norm_rows(const Matrix& x, Matrix& xhat, std::vector<double>& istd) {
  const std::size_t d = x.cols;
  xhat = Matrix(x.rows, d);
  istd.assign(x.rows, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* in = x.row(r);
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += in[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = in[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double s = 1.0 / std::sqrt(var + kLayerNormEps);
    istd[r] = s;
    double* out = xhat.row(r);
    for (std::size_t j = 0; j < d; ++j) out[j] = (in[j] - mean) * s;
  }
}

// dL/dx for y = layer_norm(x), given dL/dy and the cached xhat, istd.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat,
                           const std::vector<double>& istd) {
  const std::size_t d = dy.cols;
  Matrix dx(dy.rows, d);
  for (std::size_t r = 0; r < dy.rows; ++r) {
    const double* g = dy.row(r);
    const double* xh = xhat.row(r);
    double gm = 0.0, gxm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      gm += g[j];
      gxm += g[j] * xh[j];
    }
    gm /= static_cast<double>(d);
    gxm /= static_cast<double>(d);
    double* out = dx.row(r);
    for (std::size_t j = 0; j < d; ++j) out[j] = istd[r] * (g[j] - gm - xh[j] * gxm);
  }
  return dx;
}

}  // namespace

EncoderVariant parse_encoder_variant(const std::string& name) {
  if (name == "affine-reference") return EncoderVariant::affine_reference;
  if (name == "tiny-transformer") return EncoderVariant::tiny_transformer;
  fail(ErrorKind::config, "unknown encoder variant '" + name + "'");
}

std::string encoder_variant_name(EncoderVariant variant) {
  return variant == EncoderVariant::affine_reference ? "affine-reference"
                                                     : "tiny-transformer";
}

std::size_t EncoderConfig::mlp_dim() const {
  return static_cast<std::size_t>(std::llround(mlp_ratio * static_cast<double>(token_dim)));
}

void EncoderConfig::validate() const {
  if (input_dim == 0) fail(ErrorKind::config, "encoder input_dim must be positive");
  if (token_dim == 0) fail(ErrorKind::config, "encoder token_dim must be positive");
  if (num_content_tokens == 0)
    fail(ErrorKind::config, "encoder num_content_tokens must be positive");
  if (num_heads == 0) fail(ErrorKind::config, "encoder num_heads must be positive");
  if (input_dim % num_content_tokens != 0)
    fail(ErrorKind::config, "encoder input_dim must be divisible by num_content_tokens");
  if (mlp_ratio <= 0.0) fail(ErrorKind::config, "encoder mlp_ratio must be positive");
  if (variant == EncoderVariant::tiny_transformer) {
    if (token_dim % num_heads != 0)
      fail(ErrorKind::config, "encoder token_dim must be divisible by num_heads");
    if (mlp_dim() == 0) fail(ErrorKind::config, "encoder mlp dimension rounds to zero");
  }
}

Prompt concat_prompts(const std::vector<const Prompt*>& parts) {
  std::size_t total = 0;
  for (const Prompt* p : parts) total += p->length();
  if (total == 0) fail(ErrorKind::input, "cannot concatenate zero prompt tokens");
  Prompt out(total, parts.front()->dim());
  std::size_t row = 0;
  for (const Prompt* p : parts) {
    for (std::size_t r = 0; r < p->length(); ++r, ++row) {
      for (std::size_t c = 0; c < p->dim(); ++c) out.tokens.at(row, c) = p->tokens.at(r, c);
    }
  }
  return out;
}

EncoderState build_encoder(const EncoderConfig& config) {
  config.validate();
  EncoderState enc;
  enc.config = config;

  const std::size_t d = config.token_dim;
  const std::size_t chunk = config.chunk_dim();
  enc.tokenizer.reserve(config.num_content_tokens);
  for (std::size_t t = 0; t < config.num_content_tokens; ++t) {
    enc.tokenizer.push_back(
        seeded_matrix(config.seed, stream_id(kTokenizerStream, t), chunk, d));
  }

  if (config.variant == EncoderVariant::affine_reference) {
    enc.affine_w = seeded_matrix(config.seed, stream_id(kAffineStream, 0), d, d);
    return enc;
  }

  const std::size_t m = config.mlp_dim();
  enc.blocks.reserve(config.num_blocks);
  for (std::size_t b = 0; b < config.num_blocks; ++b) {
    TransformerBlockWeights w;
    w.wq = seeded_matrix(config.seed, stream_id(kBlockStreamBase + 1, b), d, d);
    w.wk = seeded_matrix(config.seed, stream_id(kBlockStreamBase + 2, b), d, d);
    w.wv = seeded_matrix(config.seed, stream_id(kBlockStreamBase + 3, b), d, d);
    w.wo = seeded_matrix(config.seed, stream_id(kBlockStreamBase + 4, b), d, d);
    w.w1 = seeded_matrix(config.seed, stream_id(kBlockStreamBase + 5, b), d, m);
    w.w2 = seeded_matrix(config.seed, stream_id(kBlockStreamBase + 6, b), m, d);
    enc.blocks.push_back(std::move(w));
  }
  return enc;
}

std::uint64_t encoder_hash(const EncoderState& enc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto mix_u64 = [&](std::uint64_t v) { mix_bytes(&v, sizeof v); };
  auto mix_matrix = [&](const Matrix& m) {
    mix_u64(m.rows);
    mix_u64(m.cols);
    mix_bytes(m.data.data(), m.data.size() * sizeof(double));
  };
  mix_u64(enc.config.input_dim);
  mix_u64(enc.config.token_dim);
  mix_u64(enc.config.num_content_tokens);
  mix_u64(enc.config.num_blocks);
  mix_u64(enc.config.num_heads);
  mix_bytes(&enc.config.mlp_ratio, sizeof(double));
  mix_u64(static_cast<std::uint64_t>(enc.config.variant));
  mix_u64(enc.config.seed);
  for (const Matrix& m : enc.tokenizer) mix_matrix(m);
  mix_matrix(enc.affine_w);
  for (const TransformerBlockWeights& b : enc.blocks) {
    mix_matrix(b.wq);
    mix_matrix(b.wk);
    mix_matrix(b.wv);
    mix_matrix(b.wo);
    mix_matrix(b.w1);
    mix_matrix(b.w2);
  }
  return h;
}

Matrix tokenize(const EncoderState& enc, std::span<const double> x) {
  const EncoderConfig& cfg = enc.config;
  if (x.size() != cfg.input_dim)
    fail(ErrorKind::input, "encoder input has dimension " + std::to_string(x.size()) +
                               ", expected " + std::to_string(cfg.input_dim));
  const std::size_t chunk = cfg.chunk_dim();
  Matrix tokens(cfg.num_content_tokens, cfg.token_dim);
  for (std::size_t t = 0; t < cfg.num_content_tokens; ++t) {
    const Matrix& w = enc.tokenizer[t];
    for (std::size_t i = 0; i < chunk; ++i) {
      const double xi = x[t * chunk + i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < cfg.token_dim; ++j) tokens.at(t, j) += xi * w.at(i, j);
    }
  }
  return tokens;
}

std::vector<double> encode_tokens(const EncoderState& enc, const Matrix& tokens,
                                  EncoderTrace* trace) {
  const EncoderConfig& cfg = enc.config;
  const std::size_t seq = tokens.rows;
  const std::size_t d = cfg.token_dim;
  if (tokens.cols != d) fail(ErrorKind::input, "token width does not match token_dim");
  if (seq == 0) fail(ErrorKind::input, "empty token sequence");
  if (trace) {
    trace->seq = seq;
    trace->blocks.clear();
  }

  auto mean_pool = [&](const Matrix& h) {
    std::vector<double> z(d, 0.0);
    for (std::size_t r = 0; r < h.rows; ++r) {
      const double* row = h.row(r);
      for (std::size_t j = 0; j < d; ++j) z[j] += row[j];
    }
    for (double& v : z) v /= static_cast<double>(seq);
    return z;
  };

  if (cfg.variant == EncoderVariant::affine_reference) {
    std::vector<double> pooled = mean_pool(tokens);
    std::vector<double> z(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double pi = pooled[i];
      for (std::size_t j = 0; j < d; ++j) z[j] += pi * enc.affine_w.at(i, j);
    }
    return z;
  }

  const std::size_t heads = cfg.num_heads;
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix h = tokens;
  if (trace) trace->blocks.reserve(cfg.num_blocks);
  for (std::size_t b = 0; b < cfg.num_blocks; ++b) {
    const TransformerBlockWeights& w = enc.blocks[b];
    BlockTrace bt;

    layer_norm_rows(h, bt.xhat1, bt.istd1);
    bt.q = matmul(bt.xhat1, w.wq);
    bt.k = matmul(bt.xhat1, w.wk);
    bt.v = matmul(bt.xhat1, w.wv);

    Matrix attn_out(seq, d);
    bt.attn.reserve(heads);
    for (std::size_t head = 0; head < heads; ++head) {
      const std::size_t off = head * dh;
      Matrix p(seq, seq);
      for (std::size_t i = 0; i < seq; ++i) {
        double row_max = -1e300;
        for (std::size_t j = 0; j < seq; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c)
            s += bt.q.at(i, off + c) * bt.k.at(j, off + c);
          s *= scale;
          p.at(i, j) = s;
          if (s > row_max) row_max = s;
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < seq; ++j) {
          const double e = std::exp(p.at(i, j) - row_max);
          p.at(i, j) = e;
          denom += e;
        }
        for (std::size_t j = 0; j < seq; ++j) p.at(i, j) /= denom;
      }
      for (std::size_t i = 0; i < seq; ++i) {
        for (std::size_t j = 0; j < seq; ++j) {
          const double pij = p.at(i, j);
          if (pij == 0.0) continue;
          for (std::size_t c = 0; c < dh; ++c)
            attn_out.at(i, off + c) += pij * bt.v.at(j, off + c);
        }
      }
      bt.attn.push_back(std::move(p));
    }

    Matrix a = matmul(attn_out, w.wo);
    add_inplace(h, a);  // h is now the post-attention residual

    layer_norm_rows(h, bt.xhat2, bt.istd2);
    bt.u = matmul(bt.xhat2, w.w1);
    Matrix g(seq, cfg.mlp_dim());
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = gelu(bt.u.data[i]);
    Matrix m = matmul(g, w.w2);
    add_inplace(h, m);

    if (trace) trace->blocks.push_back(std::move(bt));
  }

  return mean_pool(h);
}

std::vector<double> encode_query(const EncoderState& enc, std::span<const double> x) {
  return encode_tokens(enc, tokenize(enc, x));
}

std::vector<double> encode_with_prompt(const EncoderState& enc, std::span<const double> x,
                                       const Prompt& prompt) {
  if (prompt.length() == 0) fail(ErrorKind::input, "prompt has no tokens");
  if (prompt.dim() != enc.config.token_dim)
    fail(ErrorKind::input, "prompt token width does not match token_dim");
  const Matrix content = tokenize(enc, x);
  Matrix tokens(prompt.length() + content.rows, enc.config.token_dim);
  std::memcpy(tokens.data.data(), prompt.tokens.data.data(),
              prompt.tokens.data.size() * sizeof(double));
  std::memcpy(tokens.data.data() + prompt.tokens.data.size(), content.data.data(),
              content.data.size() * sizeof(double));
  return encode_tokens(enc, tokens);
}

Matrix backprop_to_tokens(const EncoderState& enc, const EncoderTrace& trace,
                          std::span<const double> upstream) {
  const EncoderConfig& cfg = enc.config;
  const std::size_t d = cfg.token_dim;
  if (upstream.size() != d) fail(ErrorKind::input, "upstream gradient width mismatch");
  const std::size_t seq = trace.seq;
  if (seq == 0) fail(ErrorKind::input, "empty trace");

  // mean pooling spreads the upstream gradient evenly over positions
  Matrix dh(seq, d);
  for (std::size_t r = 0; r < seq; ++r) {
    double* row = dh.row(r);
    for (std::size_t j = 0; j < d; ++j) row[j] = upstream[j] / static_cast<double>(seq);
  }

  if (cfg.variant == EncoderVariant::affine_reference) {
    // z = mean(tokens) * W  ->  dtoken = (upstream * W^T) / seq
    Matrix dt(seq, d);
    std::vector<double> du(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += upstream[j] * enc.affine_w.at(i, j);
      du[i] = s / static_cast<double>(seq);
    }
    for (std::size_t r = 0; r < seq; ++r) {
      for (std::size_t i = 0; i < d; ++i) dt.at(r, i) = du[i];
    }
    return dt;
  }

  const std::size_t heads = cfg.num_heads;
  const std::size_t dh_sz = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh_sz));

  for (std::size_t bi = cfg.num_blocks; bi-- > 0;) {
    const TransformerBlockWeights& w = enc.blocks[bi];
    const BlockTrace& bt = trace.blocks[bi];

    // h_out = h1 + gelu(layer_norm(h1) * w1) * w2
    Matrix dg = matmul_nt(dh, w.w2);
    Matrix du(seq, cfg.mlp_dim());
    for (std::size_t i = 0; i < du.data.size(); ++i)
      du.data[i] = dg.data[i] * gelu_grad(bt.u.data[i]);
    Matrix dxhat2 = matmul_nt(du, w.w1);
    Matrix dln2 = layer_norm_backward(dxhat2, bt.xhat2, bt.istd2);
    add_inplace(dh, dln2);  // dh is now dL/dh1

    // h1 = h_in + attention(layer_norm(h_in))
    Matrix dattn_out = matmul_nt(dh, w.wo);
    Matrix dq(seq, d), dk(seq, d), dv(seq, d);
    for (std::size_t head = 0; head < heads; ++head) {
      const std::size_t off = head * dh_sz;
      const Matrix& p = bt.attn[head];
      // dP = dO_h V_h^T ; dV_h = P^T dO_h
      Matrix dp(seq, seq);
      for (std::size_t i = 0; i < seq; ++i) {
        for (std::size_t j = 0; j < seq; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dh_sz; ++c)
            s += dattn_out.at(i, off + c) * bt.v.at(j, off + c);
          dp.at(i, j) = s;
        }
      }
      for (std::size_t j = 0; j < seq; ++j) {
        for (std::size_t c = 0; c < dh_sz; ++c) {
          double s = 0.0;
          for (std::size_t i = 0; i < seq; ++i) s += p.at(i, j) * dattn_out.at(i, off + c);
          dv.at(j, off + c) = s;
        }
      }
      // softmax rows: ds_ij = p_ij (dp_ij - sum_k p_ik dp_ik)
      Matrix ds(seq, seq);
      for (std::size_t i = 0; i < seq; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < seq; ++k) acc += p.at(i, k) * dp.at(i, k);
        for (std::size_t j = 0; j < seq; ++j)
          ds.at(i, j) = p.at(i, j) * (dp.at(i, j) - acc);
      }
      // scores = scale * Q_h K_h^T
      for (std::size_t i = 0; i < seq; ++i) {
        for (std::size_t c = 0; c < dh_sz; ++c) {
          double s = 0.0;
          for (std::size_t j = 0; j < seq; ++j) s += ds.at(i, j) * bt.k.at(j, off + c);
          dq.at(i, off + c) = s * scale;
        }
      }
      for (std::size_t j = 0; j < seq; ++j) {
        for (std::size_t c = 0; c < dh_sz; ++c) {
          double s = 0.0;
          for (std::size_t i = 0; i < seq; ++i) s += ds.at(i, j) * bt.q.at(i, off + c);
          dk.at(j, off + c) = s * scale;
        }
      }
    }
    Matrix dxhat1 = matmul_nt(dq, w.wq);
    add_inplace(dxhat1, matmul_nt(dk, w.wk));
    add_inplace(dxhat1, matmul_nt(dv, w.wv));
    Matrix dln1 = layer_norm_backward(dxhat1, bt.xhat1, bt.istd1);
    add_inplace(dh, dln1);  // dh is now dL/dh_in of this block
  }

  return dh;
}

Matrix grad_wrt_prompt(const EncoderState& enc, std::span<const double> x,
                       const Prompt& prompt, std::span<const double> upstream) {
  if (prompt.length() == 0) fail(ErrorKind::input, "prompt has no tokens");
  if (prompt.dim() != enc.config.token_dim)
    fail(ErrorKind::input, "prompt token width does not match token_dim");
  const Matrix content = tokenize(enc, x);
  Matrix tokens(prompt.length() + content.rows, enc.config.token_dim);
  std::memcpy(tokens.data.data(), prompt.tokens.data.data(),
              prompt.tokens.data.size() * sizeof(double));
  std::memcpy(tokens.data.data() + prompt.tokens.data.size(), content.data.data(),
              content.data.size() * sizeof(double));
  EncoderTrace trace;
  encode_tokens(enc, tokens, &trace);
  Matrix dtokens = backprop_to_tokens(enc, trace, upstream);
  Matrix dprompt(prompt.length(), prompt.dim());
  std::memcpy(dprompt.data.data(), dtokens.data.data(),
              dprompt.data.size() * sizeof(double));
  return dprompt;
}

}  // namespace f2ocl
