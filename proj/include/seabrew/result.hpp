#pragma once
// Result<T>: value-or-error return type used across the library for expected
// failures (authorization, version staleness, malformed input). Unexpected
// programming errors still assert/throw.

#include <cassert>
#include <string>
#include <utility>
#include <variant>

namespace seabrew {

enum class Errc {
  ok = 0,
  parse_error,        // grammar/format violations (carries position in message)
  decode_error,       // bad byte encoding (off-curve point, short buffer, magic)
  argument_error,     // contract violation detectable without secrets
  not_authorized,     // attribute set does not satisfy the policy
  stale_version,      // ciphertext/key version mismatch at decrypt
  stale_update,       // update applied at or below current version
  missing_update,     // gap in a version-contiguous update list
  need_key,           // symmetric-key record absent; fetch by KID first
  unknown_producer,   // signer not present in the signature table
  bad_signature,      // signature verification failed
  aead_failure,       // authenticated decryption failed
  unknown_id,         // PID/CID/object id not found
  precondition,       // protocol procedure precondition violated
  io_error,           // file read/write problems (CLI layer)
};

struct Error {
  Errc code = Errc::ok;
  std::string message;
};

template <typename T>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}           // NOLINT(google-explicit-constructor)
  Result(Error err) : v_(std::move(err)) {}           // NOLINT(google-explicit-constructor)
  Result(Errc code, std::string msg) : v_(Error{code, std::move(msg)}) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const { assert(ok()); return std::get<T>(v_); }
  T& value() { assert(ok()); return std::get<T>(v_); }
  T take() { assert(ok()); return std::move(std::get<T>(v_)); }

  const Error& error() const { assert(!ok()); return std::get<Error>(v_); }
  Errc code() const { return ok() ? Errc::ok : error().code; }

 private:
  std::variant<T, Error> v_;
};

// Result<void> analogue.
class Status {
 public:
  Status() = default;
  Status(Error err) : err_(std::move(err)) {}          // NOLINT(google-explicit-constructor)
  Status(Errc code, std::string msg) : err_(Error{code, std::move(msg)}) {}
  bool ok() const { return err_.code == Errc::ok; }
  explicit operator bool() const { return ok(); }
  const Error& error() const { return err_; }
  Errc code() const { return err_.code; }

 private:
  Error err_;
};

}  // namespace seabrew
