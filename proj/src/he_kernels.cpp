#include "relcheck/he_kernels.hpp"

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "relcheck/errors.hpp"
#include "relcheck/random.hpp"

namespace relcheck::kernels {
namespace {

mpz_class element_nonce(const PublicKey& pk, std::uint64_t nonce_seed, std::size_t index) {
  Rng rng = derive_rng(nonce_seed, Stream::kNonce, index);
  return paillier::sample_nonce(pk, rng);
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("vector length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

void check_plaintexts(const PublicKey& pk, std::span<const mpz_class> plain) {
  for (const auto& m : plain) {
    if (m < 0 || m >= pk.n) throw DomainError("plaintext outside [0, n)");
  }
}

void check_keys(const PublicKey& pk, std::span<const Ciphertext> c) {
  for (const auto& x : c) paillier::check_key(pk, x);
}

// Captures the first exception thrown inside an OpenMP region and rethrows
// it on the calling thread; exceptions must not cross the region boundary.
class FirstError {
 public:
  template <typename F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
};

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<mpz_class> encode_all(const FixedPointCodec& codec, std::span<const double> values) {
  std::vector<mpz_class> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(codec.encode(v));
  return out;
}

std::vector<double> decode_all(const FixedPointCodec& codec, std::span<const mpz_class> residues,
                               unsigned level) {
  std::vector<double> out;
  out.reserve(residues.size());
  for (const auto& r : residues) out.push_back(codec.decode(r, level));
  return out;
}

namespace serial {

CipherVector encrypt(const PublicKey& pk, std::span<const mpz_class> plain, std::uint64_t nonce_seed) {
  check_plaintexts(pk, plain);
  CipherVector out;
  out.reserve(plain.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    out.push_back(paillier::encrypt_with_nonce(pk, plain[i], element_nonce(pk, nonce_seed, i)));
  }
  return out;
}

std::vector<mpz_class> decrypt(const PrivateKey& sk, std::span<const Ciphertext> ciphers) {
  std::vector<mpz_class> out;
  out.reserve(ciphers.size());
  for (const auto& c : ciphers) out.push_back(paillier::decrypt(sk, c));
  return out;
}

CipherVector add(const PublicKey& pk, std::span<const Ciphertext> a, std::span<const Ciphertext> b) {
  check_lengths(a.size(), b.size());
  CipherVector out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(paillier::add_cipher(pk, a[i], b[i]));
  return out;
}

CipherVector scale(const PublicKey& pk, std::span<const Ciphertext> c, const mpz_class& k) {
  CipherVector out;
  out.reserve(c.size());
  for (const auto& x : c) out.push_back(paillier::scalar_mul(pk, x, k));
  return out;
}

Ciphertext inner_product(const PublicKey& pk, std::span<const Ciphertext> c,
                         std::span<const mpz_class> k) {
  check_lengths(c.size(), k.size());
  Ciphertext acc{1, pk.key_id};
  for (std::size_t i = 0; i < c.size(); ++i) {
    acc = paillier::add_cipher(pk, acc, paillier::scalar_mul(pk, c[i], k[i]));
  }
  return acc;
}

}  // namespace serial

namespace parallel {

CipherVector encrypt(const PublicKey& pk, std::span<const mpz_class> plain, std::uint64_t nonce_seed) {
  check_plaintexts(pk, plain);
  CipherVector out(plain.size());
  const auto count = static_cast<std::ptrdiff_t>(plain.size());
  FirstError err;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    err.run([&] {
      const auto idx = static_cast<std::size_t>(i);
      out[idx] = paillier::encrypt_with_nonce(pk, plain[idx], element_nonce(pk, nonce_seed, idx));
    });
  }
  err.rethrow();
  return out;
}

std::vector<mpz_class> decrypt(const PrivateKey& sk, std::span<const Ciphertext> ciphers) {
  std::vector<mpz_class> out(ciphers.size());
  const auto count = static_cast<std::ptrdiff_t>(ciphers.size());
  FirstError err;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    err.run([&] { out[static_cast<std::size_t>(i)] = paillier::decrypt(sk, ciphers[static_cast<std::size_t>(i)]); });
  }
  err.rethrow();
  return out;
}

CipherVector add(const PublicKey& pk, std::span<const Ciphertext> a, std::span<const Ciphertext> b) {
  check_lengths(a.size(), b.size());
  check_keys(pk, a);
  check_keys(pk, b);
  CipherVector out(a.size());
  const auto count = static_cast<std::ptrdiff_t>(a.size());
  FirstError err;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    err.run([&] { out[idx] = paillier::add_cipher(pk, a[idx], b[idx]); });
  }
  err.rethrow();
  return out;
}

CipherVector scale(const PublicKey& pk, std::span<const Ciphertext> c, const mpz_class& k) {
  if (k < 0 || k >= pk.n) throw DomainError("scalar outside [0, n)");
  check_keys(pk, c);
  CipherVector out(c.size());
  const auto count = static_cast<std::ptrdiff_t>(c.size());
  FirstError err;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    err.run([&] { out[idx] = paillier::scalar_mul(pk, c[idx], k); });
  }
  err.rethrow();
  return out;
}

Ciphertext inner_product(const PublicKey& pk, std::span<const Ciphertext> c,
                         std::span<const mpz_class> k) {
  check_lengths(c.size(), k.size());
  check_keys(pk, c);
  for (const auto& x : k) {
    if (x < 0 || x >= pk.n) throw DomainError("scalar outside [0, n)");
  }
  // Multiplication mod n^2 is commutative, so any reduction order yields the
  // same residue as the serial fold.
  std::vector<Ciphertext> terms(c.size());
  const auto count = static_cast<std::ptrdiff_t>(c.size());
  FirstError err;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    err.run([&] { terms[idx] = paillier::scalar_mul(pk, c[idx], k[idx]); });
  }
  err.rethrow();
  mpz_class acc = 1;
  for (const auto& t : terms) {
    acc *= t.value;
    acc %= pk.n_squared;
  }
  return {std::move(acc), pk.key_id};
}

}  // namespace parallel

}  // namespace relcheck::kernels
