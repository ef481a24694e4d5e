// Command-line surface over the library: key lifecycle, hybrid file
// encryption, revocation and the two lazy update operations, an in-process
// protocol walkthrough, and the workload simulator.
//
// Exit codes (stable contract for scripting):
//   0  success
//   2  parse or IO failure (bad flags, unreadable files, wrong format)
//   3  not authorized (key does not satisfy the policy)
//   4  version error (stale or out-of-order update material)
//
// Secret material (master keys, decryption keys, update records, recovered
// plaintexts) is written only to files created with mode 0600 and never to
// stdout.

#include <CLI11.hpp>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "seabrew/abe.hpp"
#include "seabrew/algebra.hpp"
#include "seabrew/bytes.hpp"
#include "seabrew/crypto.hpp"
#include "seabrew/hybrid.hpp"
#include "seabrew/policy.hpp"
#include "seabrew/protocol.hpp"
#include "seabrew/result.hpp"
#include "seabrew/sim.hpp"

namespace {

using namespace seabrew;

// ----------------------------------------------------------------------------
// container format: 4-byte magic, format version, kind tag, then the
// module-level serialization of the object

constexpr std::uint8_t kMagic[4] = {'S', 'B', 'R', 'W'};
constexpr std::uint8_t kFormatVersion = 1;
constexpr std::size_t kHeaderBytes = 6;

enum class FileKind : std::uint8_t {
  master_key = 1,
  encryption_key = 2,
  decryption_key = 3,
  update_record = 4,
  sealed_payload = 5,
};

const char* kind_name(FileKind k) {
  switch (k) {
    case FileKind::master_key: return "master key";
    case FileKind::encryption_key: return "encryption key";
    case FileKind::decryption_key: return "decryption key";
    case FileKind::update_record: return "update record";
    case FileKind::sealed_payload: return "encrypted payload";
  }
  return "unknown";
}

Bytes wrap(FileKind kind, Bytes payload) {
  ByteWriter w;
  w.raw(kMagic);
  w.u8(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.raw(payload);
  return w.take();
}

Result<Bytes> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Error{Errc::io_error, "cannot open " + path};
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) return Error{Errc::io_error, "cannot read " + path};
  return data;
}

Status write_file(const std::string& path, std::span<const std::uint8_t> data, mode_t mode) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, mode);
  if (fd < 0)
    return Error{Errc::io_error, "cannot create " + path + ": " + std::strerror(errno)};
  if (::fchmod(fd, mode) != 0) {
    ::close(fd);
    return Error{Errc::io_error, "cannot set permissions on " + path};
  }
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n <= 0) {
      ::close(fd);
      return Error{Errc::io_error, "cannot write " + path + ": " + std::strerror(errno)};
    }
    off += static_cast<std::size_t>(n);
  }
  if (::close(fd) != 0) return Error{Errc::io_error, "cannot close " + path};
  return Status();
}

constexpr mode_t kSecretMode = 0600;
constexpr mode_t kPublicMode = 0644;

// Load a container and hand back its payload bytes after checking magic,
// format version, and kind.
Result<Bytes> load_payload(const std::string& path, FileKind expected) {
  auto data = read_file(path);
  if (!data.ok()) return data.error();
  const Bytes& bytes = data.value();
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    return Error{Errc::decode_error, path + ": not a seabrew file (bad magic)"};
  if (bytes[4] != kFormatVersion)
    return Error{Errc::decode_error,
                 path + ": unsupported format version " + std::to_string(bytes[4])};
  if (bytes[5] != static_cast<std::uint8_t>(expected))
    return Error{Errc::decode_error, path + ": file holds a " +
                                         kind_name(static_cast<FileKind>(bytes[5])) +
                                         ", expected a " + kind_name(expected)};
  return Bytes(bytes.begin() + kHeaderBytes, bytes.end());
}

// Parse helper enforcing that the payload has no trailing bytes.
template <typename T>
Result<T> parse_all(const Bytes& payload, Result<T> (*parse)(ByteReader&),
                    const std::string& path) {
  ByteReader r(payload);
  auto value = parse(r);
  if (!value.ok()) return Error{value.error().code, path + ": " + value.error().message};
  if (!r.done()) return Error{Errc::decode_error, path + ": trailing bytes after object"};
  return value;
}

// ----------------------------------------------------------------------------
// randomness: system CSPRNG by default, deterministic stream under --seed

std::unique_ptr<algebra::Rng> make_rng(bool seeded, std::uint64_t seed) {
  if (seeded) {
    std::fprintf(stderr,
                 "warning: --seed makes every secret reproducible; test vectors only\n");
    return std::make_unique<algebra::CounterRng>(seed);
  }
  return std::make_unique<algebra::SystemRng>();
}

int exit_code_for(const Error& err) {
  switch (err.code) {
    case Errc::not_authorized:
      return 3;
    case Errc::stale_version:
    case Errc::stale_update:
    case Errc::missing_update:
      return 4;
    default:
      return 2;
  }
}

int finish(const Status& st) {
  if (st.ok()) return 0;
  std::fprintf(stderr, "error: %s\n", st.error().message.c_str());
  return exit_code_for(st.error());
}

// ----------------------------------------------------------------------------
// commands

Status cmd_setup(const std::string& out_dir, algebra::Rng& rng) {
  auto [mk, ek] = abe::setup(rng);
  ByteWriter wm;
  abe::serialize(mk, wm);
  ByteWriter we;
  abe::serialize(ek, we);
  const std::string mk_path = out_dir + "/mk.sbrw";
  const std::string ek_path = out_dir + "/ek.sbrw";
  if (auto st = write_file(mk_path, wrap(FileKind::master_key, wm.take()), kSecretMode);
      !st.ok())
    return st;
  if (auto st = write_file(ek_path, wrap(FileKind::encryption_key, we.take()), kPublicMode);
      !st.ok())
    return st;
  std::printf("wrote master key (secret): %s\n", mk_path.c_str());
  std::printf("wrote encryption key (shareable): %s\n", ek_path.c_str());
  return Status();
}

Status cmd_keygen(const std::string& mk_path, const std::vector<std::string>& attrs,
                  const std::string& out, algebra::Rng& rng) {
  auto payload = load_payload(mk_path, FileKind::master_key);
  if (!payload.ok()) return payload.error();
  auto mk = parse_all(payload.value(), abe::deserialize_master_key, mk_path);
  if (!mk.ok()) return mk.error();
  auto dk = abe::keygen(mk.value(), attrs, rng);
  if (!dk.ok()) return dk.error();
  ByteWriter w;
  abe::serialize(dk.value(), w);
  if (auto st = write_file(out, wrap(FileKind::decryption_key, w.take()), kSecretMode);
      !st.ok())
    return st;
  std::printf("wrote decryption key (secret, %zu attributes): %s\n",
              dk.value().components.size(), out.c_str());
  return Status();
}

// Hybrid payload container: the attribute layer encrypts a random pairing
// value (the KEM) and the payload travels under an AEAD keyed from that
// value. The derived key is what binds header to body — tampering with the
// header changes the recovered KEM and the AEAD open fails — so the header
// may be re-randomized across revocation epochs without touching the body.
constexpr std::string_view kFileKemLabel = "seabrew/cli/file-kem/v1";

Status cmd_encrypt(const std::string& ek_path, const std::string& policy_text,
                   const std::string& in, const std::string& out, algebra::Rng& rng) {
  auto payload = load_payload(ek_path, FileKind::encryption_key);
  if (!payload.ok()) return payload.error();
  auto ek = parse_all(payload.value(), abe::deserialize_encryption_key, ek_path);
  if (!ek.ok()) return ek.error();
  auto pol = policy::Policy::parse(policy_text);
  if (!pol.ok()) return pol.error();
  auto plain = read_file(in);
  if (!plain.ok()) return plain.error();

  const algebra::G1 kem = algebra::random_g1(rng);
  const abe::Ciphertext ct = abe::encrypt(kem, pol.value(), ek.value(), rng);
  ByteWriter ct_writer;
  abe::serialize(ct, ct_writer);
  const Bytes header = ct_writer.take();

  const Bytes key = crypto::kdf(kFileKemLabel, algebra::g1_to_bytes(kem),
                                crypto::kAeadKeyBytes);
  std::uint8_t nonce[crypto::kAeadNonceBytes];
  rng.fill(nonce);
  const Bytes body = crypto::aead_seal(key, nonce, {}, plain.value());

  ByteWriter w;
  w.blob(header);
  w.raw(nonce);
  w.blob(body);
  if (auto st = write_file(out, wrap(FileKind::sealed_payload, w.take()), kPublicMode);
      !st.ok())
    return st;
  std::printf("wrote encrypted payload: %s\n", out.c_str());
  return Status();
}

struct SealedPayload {
  abe::Ciphertext ct;
  Bytes nonce;
  Bytes body;
};

Result<SealedPayload> load_sealed(const std::string& path) {
  auto payload = load_payload(path, FileKind::sealed_payload);
  if (!payload.ok()) return payload.error();
  ByteReader r(payload.value());
  SealedPayload out;
  const Bytes header = r.blob();
  auto nonce = r.raw(crypto::kAeadNonceBytes);
  out.nonce.assign(nonce.begin(), nonce.end());
  out.body = r.blob();
  if (!r.ok() || !r.done())
    return Error{Errc::decode_error, path + ": malformed encrypted payload"};
  ByteReader hr(header);
  auto ct = abe::deserialize_ciphertext(hr);
  if (!ct.ok() || !hr.done())
    return Error{Errc::decode_error, path + ": malformed key-wrap header"};
  out.ct = ct.take();
  return out;
}

Status cmd_decrypt(const std::string& dk_path, const std::string& in,
                   const std::string& out) {
  auto payload = load_payload(dk_path, FileKind::decryption_key);
  if (!payload.ok()) return payload.error();
  auto dk = parse_all(payload.value(), abe::deserialize_decryption_key, dk_path);
  if (!dk.ok()) return dk.error();
  auto sealed = load_sealed(in);
  if (!sealed.ok()) return sealed.error();

  auto kem = abe::decrypt(sealed.value().ct, dk.value());
  if (!kem.ok()) return kem.error();
  const Bytes key = crypto::kdf(kFileKemLabel, algebra::g1_to_bytes(kem.value()),
                                crypto::kAeadKeyBytes);
  auto plain = crypto::aead_open(key, sealed.value().nonce, {}, sealed.value().body);
  if (!plain.has_value())
    return Error{Errc::aead_failure, in + ": payload integrity check failed"};
  if (auto st = write_file(out, *plain, kSecretMode); !st.ok()) return st;
  std::printf("wrote decrypted payload: %s\n", out.c_str());
  return Status();
}

Status cmd_revoke(const std::string& mk_path, const std::string& out_mk,
                  const std::string& out_update, algebra::Rng& rng) {
  auto payload = load_payload(mk_path, FileKind::master_key);
  if (!payload.ok()) return payload.error();
  auto mk = parse_all(payload.value(), abe::deserialize_master_key, mk_path);
  if (!mk.ok()) return mk.error();
  auto [mk2, uk] = abe::update_mk(mk.value(), rng);
  ByteWriter wm;
  abe::serialize(mk2, wm);
  ByteWriter wu;
  abe::serialize(uk, wu);
  if (auto st = write_file(out_mk, wrap(FileKind::master_key, wm.take()), kSecretMode);
      !st.ok())
    return st;
  if (auto st = write_file(out_update, wrap(FileKind::update_record, wu.take()), kSecretMode);
      !st.ok())
    return st;
  std::printf("advanced master key to version %llu\n",
              static_cast<unsigned long long>(mk2.version));
  std::printf("wrote master key (secret): %s\n", out_mk.c_str());
  std::printf("wrote update record (secret): %s\n", out_update.c_str());
  return Status();
}

Result<std::vector<abe::UpdateKey>> load_update_records(
    const std::vector<std::string>& paths) {
  std::vector<abe::UpdateKey> records;
  for (const auto& path : paths) {
    auto payload = load_payload(path, FileKind::update_record);
    if (!payload.ok()) return payload.error();
    auto uk = parse_all(payload.value(), abe::deserialize_update_key, path);
    if (!uk.ok()) return uk.error();
    records.push_back(uk.take());
  }
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.version < b.version; });
  return records;
}

Result<std::vector<abe::VersionedScalar>> load_updates(
    const std::vector<std::string>& paths, bool for_ciphertexts) {
  auto records = load_update_records(paths);
  if (!records.ok()) return records.error();
  std::vector<abe::VersionedScalar> steps;
  for (const auto& uk : records.value())
    steps.push_back({uk.version, for_ciphertexts ? uk.u_cp : uk.u_dk});
  return steps;
}

Status cmd_update_cp(const std::string& in, const std::vector<std::string>& update_paths,
                     const std::string& out) {
  auto sealed = load_sealed(in);
  if (!sealed.ok()) return sealed.error();
  auto steps = load_updates(update_paths, /*for_ciphertexts=*/true);
  if (!steps.ok()) return steps.error();
  auto lifted = abe::update_cp(sealed.value().ct, steps.value());
  if (!lifted.ok()) return lifted.error();

  // Only the key-wrap header changes; the sealed body travels untouched.
  ByteWriter ct_writer;
  abe::serialize(lifted.value(), ct_writer);
  ByteWriter w;
  w.blob(ct_writer.take());
  w.raw(sealed.value().nonce);
  w.blob(sealed.value().body);
  if (auto st = write_file(out, wrap(FileKind::sealed_payload, w.take()), kPublicMode);
      !st.ok())
    return st;
  std::printf("lifted encrypted payload to version %llu: %s\n",
              static_cast<unsigned long long>(lifted.value().version), out.c_str());
  return Status();
}

Status cmd_update_ek(const std::string& ek_path,
                     const std::vector<std::string>& update_paths, const std::string& out) {
  auto payload = load_payload(ek_path, FileKind::encryption_key);
  if (!payload.ok()) return payload.error();
  auto ek = parse_all(payload.value(), abe::deserialize_encryption_key, ek_path);
  if (!ek.ok()) return ek.error();
  auto records = load_update_records(update_paths);
  if (!records.ok()) return records.error();
  abe::EncryptionKey current = ek.take();
  for (const auto& uk : records.value()) {
    auto next = abe::update_ek(current, uk.u_ek, uk.version);
    if (!next.ok()) return next.error();
    current = next.take();
  }
  ByteWriter w;
  abe::serialize(current, w);
  if (auto st = write_file(out, wrap(FileKind::encryption_key, w.take()), kPublicMode);
      !st.ok())
    return st;
  std::printf("lifted encryption key to version %llu: %s\n",
              static_cast<unsigned long long>(current.version), out.c_str());
  return Status();
}

Status cmd_update_dk(const std::string& dk_path,
                     const std::vector<std::string>& update_paths, const std::string& out) {
  auto payload = load_payload(dk_path, FileKind::decryption_key);
  if (!payload.ok()) return payload.error();
  auto dk = parse_all(payload.value(), abe::deserialize_decryption_key, dk_path);
  if (!dk.ok()) return dk.error();
  auto steps = load_updates(update_paths, /*for_ciphertexts=*/false);
  if (!steps.ok()) return steps.error();
  auto lifted = abe::update_dk(dk.value(), steps.value());
  if (!lifted.ok()) return lifted.error();
  ByteWriter w;
  abe::serialize(lifted.value(), w);
  if (auto st = write_file(out, wrap(FileKind::decryption_key, w.take()), kSecretMode);
      !st.ok())
    return st;
  std::printf("lifted decryption key to version %llu: %s\n",
              static_cast<unsigned long long>(lifted.value().version), out.c_str());
  return Status();
}

// ----------------------------------------------------------------------------
// serve-demo: a complete in-process walkthrough of the message protocol

Status cmd_serve_demo(algebra::Rng& rng) {
  protocol::System s;
  if (auto st = protocol::system_init(s, 8, rng); !st.ok()) return st;
  std::puts("[1] bring-up: authority provisioned cloud and gateway");

  auto wsan_producer = protocol::producer_join(s, true, rng);
  auto remote_producer = protocol::producer_join(s, false, rng);
  if (!wsan_producer.ok()) return wsan_producer.error();
  if (!remote_producer.ok()) return remote_producer.error();
  const std::vector<std::string> doctor{"role:doctor", "unit:icu"};
  const std::vector<std::string> clerk{"role:clerk"};
  auto member = protocol::consumer_join(s, doctor, true, rng);
  auto outsider = protocol::consumer_join(s, clerk, true, rng);
  auto remote_reader = protocol::consumer_join(s, doctor, false, rng);
  if (!member.ok()) return member.error();
  if (!outsider.ok()) return outsider.error();
  if (!remote_reader.ok()) return remote_reader.error();
  std::printf("[2] enrolled producers %llu (member) and %llu (remote), consumers "
              "%llu/%llu (members) and %llu (remote)\n",
              static_cast<unsigned long long>(wsan_producer.value()),
              static_cast<unsigned long long>(remote_producer.value()),
              static_cast<unsigned long long>(member.value()),
              static_cast<unsigned long long>(outsider.value()),
              static_cast<unsigned long long>(remote_reader.value()));

  auto pol = policy::Policy::parse("role:doctor and unit:icu");
  if (!pol.ok()) return pol.error();
  const algebra::G1 remote_msg = algebra::random_g1(rng);
  if (auto st = protocol::upload_remote(s, remote_producer.value(), "chart-17", remote_msg,
                                        pol.value(), rng);
      !st.ok())
    return st;
  auto got = protocol::download_remote(s, remote_reader.value(), "chart-17", rng);
  if (!got.ok()) return got.error();
  std::puts("[3] remote path: upload accepted, authorized download succeeded");

  const std::string reading = "bay 4 pressure nominal";
  const Bytes body(reading.begin(), reading.end());
  if (auto st = protocol::upload_wsan(s, wsan_producer.value(), "reading-1", body,
                                      pol.value(), rng);
      !st.ok())
    return st;
  auto member_read = protocol::download_wsan(s, member.value(), "reading-1", rng);
  if (!member_read.ok()) return member_read.error();
  auto denied = protocol::download_wsan(s, outsider.value(), "reading-1", rng);
  std::printf("[4] member path: authorized member read %zu bytes; unauthorized member "
              "was refused (%s)\n",
              member_read.value().size(), denied.ok() ? "unexpectedly allowed"
                                                      : denied.error().message.c_str());

  if (auto st = protocol::direct_exchange(s, wsan_producer.value(), body, pol.value(), rng);
      !st.ok())
    return st;
  std::puts("[5] direct exchange: one radio broadcast reached every authorized member");

  const std::vector<protocol::Id> leaving{outsider.value()};
  if (auto st = protocol::consumer_leave(s, leaving, rng); !st.ok()) return st;
  std::puts("[6] revocation: one constant-size broadcast rolled the epoch");

  auto lazy = protocol::download_remote(s, remote_reader.value(), "chart-17", rng);
  if (!lazy.ok()) return lazy.error();
  std::puts("[7] lazy re-encryption: the old object was lifted on first touch and "
            "served to the surviving reader");

  std::puts("");
  std::puts("message trace (epoch, kind, sender, receiver, accounted bytes):");
  std::fputs(s.bus.trace_dsv().c_str(), stdout);
  return Status();
}

// ----------------------------------------------------------------------------
// simulate

Status cmd_simulate(const sim::WorkloadConfig& cfg, const std::string& out_path) {
  auto report = sim::run_compute_experiment(cfg);
  if (!report.ok()) return report.error();
  auto rendered = sim::emit_report(report.value(), out_path.empty() ? "table" : "dsv");
  if (!rendered.ok()) return rendered.error();
  if (out_path.empty()) {
    std::fwrite(rendered.value().data(), 1, rendered.value().size(), stdout);
    return Status();
  }
  if (auto st = write_file(out_path, rendered.value(), kPublicMode); !st.ok()) return st;
  std::printf("wrote report: %s\n", out_path.c_str());
  return Status();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"revocable attribute-based encryption with broadcast key rotation"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool seeded = false;
  app.add_option("--seed", seed, "deterministic randomness (test vectors only; emits a warning)")
      ->each([&](const std::string&) { seeded = true; });

  int rc = 0;
  auto run = [&](const Status& st) { rc = finish(st); };

  // setup
  auto* setup = app.add_subcommand("setup", "generate a master key and encryption key");
  auto setup_out = std::make_shared<std::string>(".");
  setup->add_option("--out", *setup_out, "output directory")->capture_default_str();
  setup->callback([&, setup_out] {
    auto rng = make_rng(seeded, seed);
    run(cmd_setup(*setup_out, *rng));
  });

  // keygen
  auto* keygen = app.add_subcommand("keygen", "issue a decryption key for an attribute set");
  auto kg_mk = std::make_shared<std::string>();
  auto kg_attrs = std::make_shared<std::vector<std::string>>();
  auto kg_out = std::make_shared<std::string>();
  keygen->add_option("--mk", *kg_mk, "master key file")->required();
  keygen->add_option("-a,--attr", *kg_attrs, "attribute (repeatable)")->required();
  keygen->add_option("--out", *kg_out, "output decryption key file")->required();
  keygen->callback([&, kg_mk, kg_attrs, kg_out] {
    auto rng = make_rng(seeded, seed);
    run(cmd_keygen(*kg_mk, *kg_attrs, *kg_out, *rng));
  });

  // encrypt
  auto* encrypt = app.add_subcommand("encrypt", "encrypt a file under a policy");
  auto en_ek = std::make_shared<std::string>();
  auto en_policy = std::make_shared<std::string>();
  auto en_in = std::make_shared<std::string>();
  auto en_out = std::make_shared<std::string>();
  encrypt->add_option("--ek", *en_ek, "encryption key file")->required();
  encrypt->add_option("--policy", *en_policy, "access policy, e.g. \"a and (b or c)\"")
      ->required();
  encrypt->add_option("--in", *en_in, "payload file")->required();
  encrypt->add_option("--out", *en_out, "output file")->required();
  encrypt->callback([&, en_ek, en_policy, en_in, en_out] {
    auto rng = make_rng(seeded, seed);
    run(cmd_encrypt(*en_ek, *en_policy, *en_in, *en_out, *rng));
  });

  // decrypt
  auto* decrypt = app.add_subcommand("decrypt", "decrypt a file with a decryption key");
  auto de_dk = std::make_shared<std::string>();
  auto de_in = std::make_shared<std::string>();
  auto de_out = std::make_shared<std::string>();
  decrypt->add_option("--dk", *de_dk, "decryption key file")->required();
  decrypt->add_option("--in", *de_in, "encrypted payload file")->required();
  decrypt->add_option("--out", *de_out, "output file")->required();
  decrypt->callback([&, de_dk, de_in, de_out] { run(cmd_decrypt(*de_dk, *de_in, *de_out)); });

  // revoke
  auto* revoke = app.add_subcommand(
      "revoke", "advance the master key one revocation epoch and emit the update record");
  auto rv_mk = std::make_shared<std::string>();
  auto rv_out_mk = std::make_shared<std::string>();
  auto rv_out_uk = std::make_shared<std::string>();
  revoke->add_option("--mk", *rv_mk, "master key file")->required();
  revoke->add_option("--out-mk", *rv_out_mk, "new master key file (default: overwrite --mk)");
  revoke->add_option("--out-update", *rv_out_uk, "update record file")->required();
  revoke->callback([&, rv_mk, rv_out_mk, rv_out_uk] {
    auto rng = make_rng(seeded, seed);
    run(cmd_revoke(*rv_mk, rv_out_mk->empty() ? *rv_mk : *rv_out_mk, *rv_out_uk, *rng));
  });

  // update-cp
  auto* ucp = app.add_subcommand("update-cp",
                                 "lift an encrypted payload across revocation epochs");
  auto ucp_in = std::make_shared<std::string>();
  auto ucp_updates = std::make_shared<std::vector<std::string>>();
  auto ucp_out = std::make_shared<std::string>();
  ucp->add_option("--in", *ucp_in, "encrypted payload file")->required();
  ucp->add_option("-u,--update", *ucp_updates, "update record file (repeatable)")->required();
  ucp->add_option("--out", *ucp_out, "output file")->required();
  ucp->callback([&, ucp_in, ucp_updates, ucp_out] {
    run(cmd_update_cp(*ucp_in, *ucp_updates, *ucp_out));
  });

  // update-ek
  auto* uek = app.add_subcommand("update-ek",
                                 "lift an encryption key across revocation epochs");
  auto uek_ek = std::make_shared<std::string>();
  auto uek_updates = std::make_shared<std::vector<std::string>>();
  auto uek_out = std::make_shared<std::string>();
  uek->add_option("--ek", *uek_ek, "encryption key file")->required();
  uek->add_option("-u,--update", *uek_updates, "update record file (repeatable)")->required();
  uek->add_option("--out", *uek_out, "output file")->required();
  uek->callback([&, uek_ek, uek_updates, uek_out] {
    run(cmd_update_ek(*uek_ek, *uek_updates, *uek_out));
  });

  // update-dk
  auto* udk = app.add_subcommand("update-dk",
                                 "lift a decryption key across revocation epochs");
  auto udk_dk = std::make_shared<std::string>();
  auto udk_updates = std::make_shared<std::vector<std::string>>();
  auto udk_out = std::make_shared<std::string>();
  udk->add_option("--dk", *udk_dk, "decryption key file")->required();
  udk->add_option("-u,--update", *udk_updates, "update record file (repeatable)")->required();
  udk->add_option("--out", *udk_out, "output file")->required();
  udk->callback([&, udk_dk, udk_updates, udk_out] {
    run(cmd_update_dk(*udk_dk, *udk_updates, *udk_out));
  });

  // serve-demo
  auto* demo = app.add_subcommand(
      "serve-demo", "run the full message protocol in-process and print the trace");
  demo->callback([&] {
    auto rng = make_rng(seeded, seed);
    run(cmd_serve_demo(*rng));
  });

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run the workload simulator");
  auto cfg = std::make_shared<sim::WorkloadConfig>(sim::WorkloadConfig::desk_scale());
  auto sim_out = std::make_shared<std::string>();
  auto profile = std::make_shared<std::string>("80bit");
  auto paper = std::make_shared<bool>(false);
  auto* o_ct = simulate->add_option("--ciphertexts", cfg->ciphertexts, "objects in the store")
                   ->capture_default_str();
  auto* o_at = simulate->add_option("--attrs", cfg->attrs, "attributes per policy and key")
                   ->capture_default_str();
  auto* o_un = simulate->add_option("--universe", cfg->universe, "attribute universe size")
                   ->capture_default_str();
  auto* o_dr = simulate->add_option("--daily-requests", cfg->daily_requests,
                                    "mean requests per day")
                   ->capture_default_str();
  auto* o_rd = simulate->add_option("--revocation-days", cfg->revocation_days,
                                    "mean days between revocations")
                   ->capture_default_str();
  auto* o_hd = simulate->add_option("--horizon-days", cfg->horizon_days, "simulated days")
                   ->capture_default_str();
  auto* o_rp = simulate->add_option("--reps", cfg->reps, "independent repetitions")
                   ->capture_default_str();
  simulate->add_option("--out", *sim_out, "write a tab-separated report here "
                                          "(default: table on stdout)");
  simulate->add_option("--profile", *profile, "security profile")
      ->check(CLI::IsMember({"80bit"}))
      ->capture_default_str();
  auto* o_ps = simulate->add_flag("--paper-scale", *paper,
                                  "run the full-scale workload (100k objects, 50k "
                                  "requests/day, one year, 100 reps); hours of compute");
  for (auto* opt : {o_ct, o_at, o_un, o_dr, o_rd, o_hd, o_rp}) opt->excludes(o_ps);
  simulate->callback([&, cfg, sim_out, paper] {
    sim::WorkloadConfig final_cfg = *paper ? sim::WorkloadConfig::paper_scale() : *cfg;
    if (seeded) final_cfg.seed = seed;
    if (*paper)
      std::fprintf(stderr, "note: full-scale run; expect hours of compute\n");
    run(cmd_simulate(final_cfg, *sim_out));
  });

  // Let `--seed` (defined on the top-level app) appear after the subcommand
  // name, which is how it is naturally typed.
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return rc;
}
