#include "seabrew/protocol.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace seabrew::protocol {

using algebra::G0;
using algebra::Scalar;

// ----------------------------------------------------------------------------
// transport

std::string_view to_string(MsgKind kind) {
  switch (kind) {
    case MsgKind::init_cloud: return "init_cloud";
    case MsgKind::init_gateway: return "init_gateway";
    case MsgKind::producer_enroll: return "producer_enroll";
    case MsgKind::producer_credentials: return "producer_credentials";
    case MsgKind::producer_table_row: return "producer_table_row";
    case MsgKind::producer_row_relay: return "producer_row_relay";
    case MsgKind::producer_row_broadcast: return "producer_row_broadcast";
    case MsgKind::consumer_enroll: return "consumer_enroll";
    case MsgKind::consumer_credentials: return "consumer_credentials";
    case MsgKind::consumer_table_row: return "consumer_table_row";
    case MsgKind::consumer_gateway_enroll: return "consumer_gateway_enroll";
    case MsgKind::consumer_wsan_kit: return "consumer_wsan_kit";
    case MsgKind::object_upload: return "object_upload";
    case MsgKind::signcrypted_key_upload: return "signcrypted_key_upload";
    case MsgKind::signcrypted_data_upload: return "signcrypted_data_upload";
    case MsgKind::download_request: return "download_request";
    case MsgKind::download_reply: return "download_reply";
    case MsgKind::key_request: return "key_request";
    case MsgKind::key_reply: return "key_reply";
    case MsgKind::producer_update: return "producer_update";
    case MsgKind::consumer_update: return "consumer_update";
    case MsgKind::wsan_data_broadcast: return "wsan_data_broadcast";
    case MsgKind::producer_leave_notice: return "producer_leave_notice";
    case MsgKind::producer_leave_relay: return "producer_leave_relay";
    case MsgKind::producer_leave_broadcast: return "producer_leave_broadcast";
    case MsgKind::consumer_leave_notice: return "consumer_leave_notice";
    case MsgKind::consumer_leave_gateway: return "consumer_leave_gateway";
    case MsgKind::revocation_broadcast: return "revocation_broadcast";
  }
  return "unknown";
}

Envelope Bus::send(MsgKind kind, Id sender, Id receiver, Bytes payload,
                   std::optional<Signature> signature,
                   std::optional<std::size_t> accounted) {
  Envelope env{kind, sender, std::move(payload), signature};
  if (interceptor) interceptor(env);
  log_.push_back({epoch, kind, sender, receiver,
                  accounted.value_or((env.signature ? crypto::kSignatureBytes : 0) +
                                     env.payload.size())});
  return env;
}

std::string Bus::trace_dsv() const {
  std::ostringstream out;
  out << "epoch\tkind\tsender\treceiver\tbytes\n";
  for (const auto& e : log_)
    out << e.epoch << '\t' << to_string(e.kind) << '\t' << e.sender << '\t'
        << e.receiver << '\t' << e.bytes << '\n';
  return out.str();
}

// ----------------------------------------------------------------------------
// helpers

namespace {

// What a point-to-point signature covers: the kind tag and claimed sender are
// bound in, so an envelope cannot be replayed as a different message type or
// on behalf of another actor.
Bytes envelope_message(MsgKind kind, Id sender, std::span<const std::uint8_t> payload) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind));
  w.u64(sender);
  w.raw(payload);
  return w.take();
}

Envelope send_signed(Bus& bus, MsgKind kind, Id sender, Id receiver, Bytes payload,
                     const crypto::SigningKey& key,
                     std::optional<std::size_t> accounted = std::nullopt) {
  auto sig = crypto::sign(key, envelope_message(kind, sender, payload));
  return bus.send(kind, sender, receiver, std::move(payload), sig, accounted);
}

Envelope send_plain(Bus& bus, MsgKind kind, Id sender, Id receiver, Bytes payload,
                    std::optional<std::size_t> accounted = std::nullopt) {
  return bus.send(kind, sender, receiver, std::move(payload), std::nullopt, accounted);
}

Status check_envelope(const G0& expected_signer, const Envelope& env) {
  if (!env.signature ||
      !crypto::verify(expected_signer,
                      envelope_message(env.kind, env.sender, env.payload),
                      *env.signature))
    return Error{Errc::bad_signature,
                 std::string(to_string(env.kind)) + ": envelope signature does not verify"};
  return {};
}

std::optional<G0> get_g0(ByteReader& r) {
  auto b = r.raw(algebra::kG0Bytes);
  if (!r.ok()) return std::nullopt;
  return algebra::g0_from_bytes(b);
}

std::optional<Scalar> get_scalar(ByteReader& r) {
  auto b = r.raw(algebra::kScalarBytes);
  if (!r.ok()) return std::nullopt;
  return Scalar::from_bytes(b);
}

Result<Bytes> open_box(const crypto::BoxKeyPair& box,
                       std::span<const std::uint8_t> sealed, const char* what) {
  auto plain = crypto::open_sealed(box.secret, sealed);
  if (!plain) return Error{Errc::aead_failure, what};
  return *std::move(plain);
}

Error decode_err(std::string what) { return Error{Errc::decode_error, std::move(what)}; }

}  // namespace

// ----------------------------------------------------------------------------
// cloud state

Scalar CloudState::accumulated_cp(std::uint64_t from, std::uint64_t to) const {
  assert(from <= to && to < prefix_cp.size());
  return prefix_cp[to] * prefix_cp[from].inverse().value();
}

Scalar CloudState::accumulated_dk(std::uint64_t from, std::uint64_t to) const {
  assert(from <= to && to < prefix_cp.size());
  return prefix_cp[from] * prefix_cp[to].inverse().value();
}

void CloudState::lift_object(abe::Ciphertext& object) {
  if (object.version >= v_mk()) return;
  algebra::Meter::Scope scope("protocol.update_cp");
  object.c = algebra::g0_exp(object.c, accumulated_cp(object.version, v_mk()));
  object.version = v_mk();
}

// ----------------------------------------------------------------------------
// producer state

Bytes ProducerState::state_dump() const {
  ByteWriter w;
  w.u64(pid);
  w.u8(is_wsan ? 1 : 0);
  w.raw(key.secret.to_bytes());
  w.raw(algebra::g0_to_bytes(key.public_key));
  abe::serialize(ek, w);
  for (const auto& rec : symkeys.records()) {
    w.raw(rec.kid);
    w.str(rec.access_policy.to_string());
    w.raw(rec.sym_key);
  }
  w.raw(algebra::g0_to_bytes(authority_pub));
  w.raw(algebra::g0_to_bytes(gateway_pub));
  w.raw(algebra::g0_to_bytes(cloud_pub));
  return w.take();
}

// ----------------------------------------------------------------------------
// bring-up

Status system_init(System& s, std::uint32_t wsan_capacity, algebra::Rng& rng) {
  if (!s.cloud.prefix_cp.empty())
    return Error{Errc::precondition, "system already initialized"};
  if (wsan_capacity == 0)
    return Error{Errc::argument_error, "broadcast capacity must be at least 1"};

  // Everything below is staged into locals; a failed hop leaves `s` untouched.
  AuthorityState a;
  CloudState c;
  GatewayState g;

  auto [mk, ek] = abe::setup(rng);
  a.mk = mk;
  a.ek = ek;
  a.key = crypto::sig_keygen(rng);
  c.key = crypto::sig_keygen(rng);
  c.box = crypto::sig_keygen(rng);
  g.key = crypto::sig_keygen(rng);
  g.box = crypto::sig_keygen(rng);

  // Verification keys are provisioned out of band.
  c.authority_pub = a.key.public_key;
  g.authority_pub = a.key.public_key;
  g.cloud_pub = c.key.public_key;

  // Authority -> cloud: the public encryption key at the starting version.
  ByteWriter w1;
  abe::serialize(a.ek, w1);
  auto env1 = send_signed(s.bus, MsgKind::init_cloud, kAuthorityId, kCloudId, w1.take(), a.key);
  if (auto st = check_envelope(c.authority_pub, env1); !st.ok()) return st;
  {
    ByteReader r(env1.payload);
    auto parsed = abe::deserialize_encryption_key(r);
    if (!parsed.ok()) return parsed.error();
    if (!r.done()) return decode_err("init_cloud: trailing bytes");
    c.ek = parsed.value();
  }

  // Cloud -> gateway: the same key; the gateway keeps only the version.
  ByteWriter w2;
  abe::serialize(c.ek, w2);
  auto env2 = send_signed(s.bus, MsgKind::init_gateway, kCloudId, kGatewayId, w2.take(), c.key);
  if (auto st = check_envelope(g.cloud_pub, env2); !st.ok()) return st;
  {
    ByteReader r(env2.payload);
    auto parsed = abe::deserialize_encryption_key(r);
    if (!parsed.ok()) return parsed.error();
    if (!r.done()) return decode_err("init_gateway: trailing bytes");
    g.v_mk = parsed.value().version;
  }

  // The gateway brings up the broadcast channel.
  auto [bpk, keys] = bcast::bc_setup(wsan_capacity, rng);
  g.bpk = std::move(bpk);
  g.receiver_keys = std::move(keys);

  c.prefix_cp = {Scalar::from_u64(1)};

  s.authority = std::move(a);
  s.cloud = std::move(c);
  s.gateway = std::move(g);
  s.bus.epoch = 0;
  return {};
}

// ----------------------------------------------------------------------------
// joins

Result<Id> producer_join(System& s, bool is_wsan, algebra::Rng& rng) {
  if (s.cloud.prefix_cp.empty())
    return Error{Errc::precondition, "system not initialized"};

  ProducerState p;
  p.is_wsan = is_wsan;
  p.key = crypto::sig_keygen(rng);
  p.authority_pub = s.authority.key.public_key;
  p.gateway_pub = s.gateway.key.public_key;
  p.cloud_pub = s.cloud.key.public_key;

  // Producer -> authority: verification key, self-signed as possession
  // proof. Sender id 0: none has been assigned yet.
  ByteWriter w1;
  w1.raw(algebra::g0_to_bytes(p.key.public_key));
  w1.u8(is_wsan ? 1 : 0);
  auto env1 = send_signed(s.bus, MsgKind::producer_enroll, 0, kAuthorityId, w1.take(), p.key);

  // -- authority --
  G0 enroll_pub;
  bool enroll_wsan = false;
  {
    ByteReader r(env1.payload);
    auto pub = get_g0(r);
    enroll_wsan = r.u8() != 0;
    if (!pub || !r.done()) return decode_err("producer_enroll: malformed");
    if (auto st = check_envelope(*pub, env1); !st.ok()) return st.error();
    enroll_pub = *pub;
  }
  for (const auto& [id, rec] : s.authority.producers)
    if (rec.sig_pub == enroll_pub)
      return Error{Errc::argument_error, "verification key already enrolled"};

  const Id pid = s.authority.next_id;

  // Authority -> producer: assigned id + the current encryption key.
  ByteWriter w2;
  w2.u64(pid);
  abe::serialize(s.authority.ek, w2);
  auto env2 = send_signed(s.bus, MsgKind::producer_credentials, kAuthorityId, pid,
                          w2.take(), s.authority.key);

  // -- producer --
  {
    if (auto st = check_envelope(p.authority_pub, env2); !st.ok()) return st.error();
    ByteReader r(env2.payload);
    p.pid = r.u64();
    auto parsed = abe::deserialize_encryption_key(r);
    if (!parsed.ok()) return parsed.error();
    if (!r.done()) return decode_err("producer_credentials: trailing bytes");
    p.ek = parsed.value();
  }

  // Authority -> cloud: producer-table row.
  ByteWriter w3;
  w3.u64(pid);
  w3.raw(algebra::g0_to_bytes(enroll_pub));
  w3.u64(s.authority.ek.version);
  w3.u8(enroll_wsan ? 1 : 0);
  auto env3 = send_signed(s.bus, MsgKind::producer_table_row, kAuthorityId, kCloudId,
                          w3.take(), s.authority.key);

  // -- cloud --
  CloudState::ProducerRow row;
  Id row_id = 0;
  {
    if (auto st = check_envelope(s.cloud.authority_pub, env3); !st.ok()) return st.error();
    ByteReader r(env3.payload);
    row_id = r.u64();
    auto pub = get_g0(r);
    row.v_ek = r.u64();
    row.is_wsan = r.u8() != 0;
    if (!pub || !r.done()) return decode_err("producer_table_row: malformed");
    row.sig_pub = *pub;
  }

  // WSAN producers also land in the gateway's signature table, and the
  // authority-signed row is rebroadcast verbatim so every member's table
  // copy learns it. The relayed bytes are identical for all receivers, so
  // one verification stands for the lot.
  Id relay_id = 0;
  G0 relay_pub;
  if (enroll_wsan) {
    ByteWriter w4;
    w4.u64(pid);
    w4.raw(algebra::g0_to_bytes(enroll_pub));
    auto env4 = send_signed(s.bus, MsgKind::producer_row_relay, kAuthorityId, kGatewayId,
                            w4.take(), s.authority.key);

    // -- gateway --
    if (auto st = check_envelope(s.gateway.authority_pub, env4); !st.ok()) return st.error();
    {
      ByteReader r(env4.payload);
      relay_id = r.u64();
      auto pub = get_g0(r);
      if (!pub || !r.done()) return decode_err("producer_row_relay: malformed");
      relay_pub = *pub;
    }

    // Gateway -> WSAN: the authority's signature travels inside the payload.
    ByteWriter w5;
    w5.raw(*env4.signature);
    w5.raw(env4.payload);
    auto env5 = send_plain(s.bus, MsgKind::producer_row_broadcast, kGatewayId, kBroadcastId,
                           w5.take());

    // -- every WSAN consumer (each holds the same authority key) --
    {
      if (env5.payload.size() <= crypto::kSignatureBytes)
        return decode_err("producer_row_broadcast: short");
      std::array<std::uint8_t, crypto::kSignatureBytes> inner_sig{};
      std::copy_n(env5.payload.begin(), crypto::kSignatureBytes, inner_sig.begin());
      const Bytes inner(env5.payload.begin() + crypto::kSignatureBytes, env5.payload.end());
      if (!crypto::verify(s.authority.key.public_key,
                          envelope_message(MsgKind::producer_row_relay, kAuthorityId, inner),
                          inner_sig))
        return Error{Errc::bad_signature,
                     "producer_row_broadcast: relayed signature does not verify"};
      ByteReader r(inner);
      relay_id = r.u64();
      auto pub = get_g0(r);
      if (!pub || !r.done()) return decode_err("producer_row_broadcast: malformed");
      relay_pub = *pub;
    }
  }

  // Commit.
  s.authority.producers.emplace(pid, AuthorityState::ProducerRecord{enroll_pub, enroll_wsan});
  s.authority.next_id += 1;
  s.cloud.pt.emplace(row_id, row);
  if (enroll_wsan) {
    s.gateway.sig_table.emplace(relay_id, relay_pub);
    for (const auto& member : s.gateway.slots) {
      auto cit = s.consumers.find(member.first);
      if (cit != s.consumers.end()) cit->second.sig_table.emplace(relay_id, relay_pub);
    }
  }
  s.producers.emplace(pid, std::move(p));
  return pid;
}

Result<Id> consumer_join(System& s, std::span<const std::string> attributes,
                         bool is_wsan, algebra::Rng& rng) {
  if (s.cloud.prefix_cp.empty())
    return Error{Errc::precondition, "system not initialized"};
  if (is_wsan && s.gateway.next_slot > s.gateway.bpk.n)
    return Error{Errc::argument_error, "broadcast capacity exhausted"};

  ConsumerState c;
  c.is_wsan = is_wsan;
  c.kdk = crypto::sig_keygen(rng);
  c.authority_pub = s.authority.key.public_key;
  c.gateway_pub = s.gateway.key.public_key;
  c.cloud_pub = s.cloud.key.public_key;

  // Consumer -> authority: distribution key + attribute set. Unsigned — a
  // consumer holds no signing pair.
  ByteWriter w1;
  w1.raw(algebra::g0_to_bytes(c.kdk.public_key));
  w1.u8(is_wsan ? 1 : 0);
  w1.u16(static_cast<std::uint16_t>(attributes.size()));
  for (const auto& attr : attributes) w1.str(attr);
  auto env1 = send_plain(s.bus, MsgKind::consumer_enroll, 0, kAuthorityId, w1.take());

  // -- authority --
  G0 enroll_kdk;
  bool enroll_wsan = false;
  abe::DecryptionKey dk;
  {
    ByteReader r(env1.payload);
    auto pub = get_g0(r);
    enroll_wsan = r.u8() != 0;
    const std::size_t count = r.u16();
    std::vector<std::string> attrs;
    attrs.reserve(count);
    for (std::size_t i = 0; i < count && r.ok(); ++i) attrs.push_back(r.str());
    if (!pub || !r.done()) return decode_err("consumer_enroll: malformed");
    enroll_kdk = *pub;
    auto keyed = abe::keygen(s.authority.mk, attrs, rng);
    if (!keyed.ok()) return keyed.error();
    dk = keyed.take();
  }

  const Id cid = s.authority.next_id;

  // Authority -> consumer: assigned id + the key sealed under the
  // distribution key (nothing on this hop reveals key material).
  ByteWriter inner;
  abe::serialize(dk, inner);
  const Bytes dk_bytes = inner.take();
  ByteWriter w2;
  w2.u64(cid);
  w2.blob(crypto::seal_to(enroll_kdk, dk_bytes, rng));
  auto env2 = send_signed(s.bus, MsgKind::consumer_credentials, kAuthorityId, cid,
                          w2.take(), s.authority.key);

  // -- consumer --
  {
    if (auto st = check_envelope(c.authority_pub, env2); !st.ok()) return st.error();
    ByteReader r(env2.payload);
    c.cid = r.u64();
    const Bytes sealed = r.blob();
    if (!r.ok() || !r.done()) return decode_err("consumer_credentials: malformed");
    auto plain = open_box(c.kdk, sealed, "consumer_credentials: sealed key did not open");
    if (!plain.ok()) return plain.error();
    const Bytes& key_bytes = plain.value();
    ByteReader kr(key_bytes);
    auto parsed = abe::deserialize_decryption_key(kr);
    if (!parsed.ok()) return parsed.error();
    if (!kr.done()) return decode_err("consumer_credentials: trailing key bytes");
    c.dk = parsed.value();
  }

  // Authority -> cloud: consumer-table row. Only the anchor component of the
  // key crosses this hop; the attribute components never leave the consumer
  // and the authority.
  ByteWriter w3;
  w3.u64(cid);
  w3.raw(algebra::g0_to_bytes(dk.d));
  w3.raw(algebra::g0_to_bytes(enroll_kdk));
  w3.u8(enroll_wsan ? 1 : 0);
  auto env3 = send_signed(s.bus, MsgKind::consumer_table_row, kAuthorityId, kCloudId,
                          w3.take(), s.authority.key);

  // -- cloud --
  CloudState::ConsumerRow row;
  Id row_id = 0;
  {
    if (auto st = check_envelope(s.cloud.authority_pub, env3); !st.ok()) return st.error();
    ByteReader r(env3.payload);
    row_id = r.u64();
    auto d = get_g0(r);
    auto kdk_pub = get_g0(r);
    row.is_wsan = r.u8() != 0;
    if (!d || !kdk_pub || !r.done()) return decode_err("consumer_table_row: malformed");
    row.d = *d;
    row.kdk_pub = *kdk_pub;
    row.v_dk = s.cloud.v_mk();  // a fresh key is issued at the current version
  }

  Id member_id = 0;
  G0 member_kdk;
  std::uint32_t slot = 0;
  if (enroll_wsan) {
    // Authority -> gateway: the new member's distribution key.
    ByteWriter w4;
    w4.u64(cid);
    w4.raw(algebra::g0_to_bytes(enroll_kdk));
    auto env4 = send_signed(s.bus, MsgKind::consumer_gateway_enroll, kAuthorityId, kGatewayId,
                            w4.take(), s.authority.key);

    // -- gateway --
    {
      if (auto st = check_envelope(s.gateway.authority_pub, env4); !st.ok()) return st.error();
      ByteReader r(env4.payload);
      member_id = r.u64();
      auto pub = get_g0(r);
      if (!pub || !r.done()) return decode_err("consumer_gateway_enroll: malformed");
      member_kdk = *pub;
    }
    slot = s.gateway.next_slot;

    // Gateway -> consumer: signature table and broadcast public key in the
    // clear, the member's broadcast private key sealed, all gateway-signed.
    ByteWriter w5;
    w5.u32(slot);
    w5.u32(static_cast<std::uint32_t>(s.gateway.sig_table.size()));
    {
      std::vector<std::pair<Id, G0>> entries(s.gateway.sig_table.begin(),
                                             s.gateway.sig_table.end());
      std::sort(entries.begin(), entries.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      for (const auto& [id, pub] : entries) {
        w5.u64(id);
        w5.raw(algebra::g0_to_bytes(pub));
      }
    }
    bcast::serialize(s.gateway.bpk, w5);
    ByteWriter keyw;
    bcast::serialize(s.gateway.receiver_keys[slot - 1], keyw);
    const Bytes key_bytes = keyw.take();
    w5.blob(crypto::seal_to(member_kdk, key_bytes, rng));
    auto env5 = send_signed(s.bus, MsgKind::consumer_wsan_kit, kGatewayId, cid,
                            w5.take(), s.gateway.key);

    // -- consumer --
    {
      if (auto st = check_envelope(c.gateway_pub, env5); !st.ok()) return st.error();
      ByteReader r(env5.payload);
      const std::uint32_t my_slot = r.u32();
      const std::uint32_t count = r.u32();
      for (std::uint32_t i = 0; i < count && r.ok(); ++i) {
        const Id row_pid = r.u64();
        auto pub = get_g0(r);
        if (!pub) return decode_err("consumer_wsan_kit: bad table entry");
        c.sig_table.emplace(row_pid, *pub);
      }
      auto bpk = bcast::deserialize_broadcast_public_key(r);
      if (!bpk.ok()) return bpk.error();
      const Bytes sealed = r.blob();
      if (!r.ok() || !r.done()) return decode_err("consumer_wsan_kit: malformed");
      auto plain = open_box(c.kdk, sealed, "consumer_wsan_kit: sealed broadcast key did not open");
      if (!plain.ok()) return plain.error();
      const Bytes& kb = plain.value();
      ByteReader kr(kb);
      auto priv = bcast::deserialize_broadcast_private_key(kr);
      if (!priv.ok()) return priv.error();
      if (!kr.done()) return decode_err("consumer_wsan_kit: trailing key bytes");
      if (priv.value().index != my_slot)
        return decode_err("consumer_wsan_kit: broadcast key index mismatch");
      c.bpk = bpk.take();
      c.d_cid = priv.value();
    }
  }

  // Commit.
  s.authority.consumers.emplace(cid, AuthorityState::ConsumerRecord{enroll_kdk, enroll_wsan});
  s.authority.next_id += 1;
  s.cloud.ct.emplace(row_id, row);
  if (enroll_wsan) {
    s.gateway.consumers.emplace(member_id, member_kdk);
    s.gateway.slots.emplace(member_id, slot);
    s.gateway.next_slot += 1;
  }
  s.consumers.emplace(cid, std::move(c));
  return cid;
}

// ----------------------------------------------------------------------------
// uploads

Status upload_remote(System& s, Id pid, std::string_view object_id,
                     const algebra::G1& message,
                     const policy::Policy& access_policy, algebra::Rng& rng) {
  auto pit = s.producers.find(pid);
  if (pit == s.producers.end()) return Error{Errc::unknown_id, "no such producer endpoint"};
  ProducerState& p = pit->second;

  // Encrypt locally; the plaintext is never stored on the device.
  const abe::Ciphertext ct = abe::encrypt(message, access_policy, p.ek, rng);
  ByteWriter w;
  w.str(object_id);
  abe::serialize(ct, w);
  auto env = send_signed(s.bus, MsgKind::object_upload, pid, kCloudId, w.take(), p.key);

  // -- cloud --
  auto rit = s.cloud.pt.find(env.sender);
  if (rit == s.cloud.pt.end())
    return Error{Errc::unknown_id, "object_upload: producer not in table"};
  if (auto st = check_envelope(rit->second.sig_pub, env); !st.ok()) return st;
  std::string oid;
  abe::Ciphertext stored;
  {
    ByteReader r(env.payload);
    oid = r.str();
    auto parsed = abe::deserialize_ciphertext(r);
    if (!parsed.ok()) return parsed.error();
    if (!r.done()) return decode_err("object_upload: trailing bytes");
    stored = parsed.take();
  }
  const std::uint64_t stored_version = stored.version;
  s.cloud.objects[oid] = std::move(stored);

  // A lagging producer is brought current after the fact; the object just
  // stored keeps its version and is lifted lazily at download time.
  if (stored_version < s.cloud.v_mk()) return remote_producer_update(s, pid);
  return {};
}

Status upload_wsan(System& s, Id pid, std::string_view object_id,
                   std::span<const std::uint8_t> plaintext,
                   const policy::Policy& access_policy, algebra::Rng& rng) {
  auto pit = s.producers.find(pid);
  if (pit == s.producers.end()) return Error{Errc::unknown_id, "no such producer endpoint"};
  ProducerState& p = pit->second;
  if (!p.is_wsan) return Error{Errc::precondition, "not a WSAN producer"};

  // First use of a policy this epoch mints a record; that is a device-local
  // step, so a later rejected upload leaves the record behind (harmless: the
  // key id is simply retried or superseded at the next epoch wipe).
  auto [record, upload] =
      hybrid::get_or_create_symkey(p.symkeys, access_policy, p.ek, pid, p.key, rng);

  if (upload) {
    // The wrapped key carries its own producer signature; no envelope
    // signature is added on top.
    auto env = send_plain(s.bus, MsgKind::signcrypted_key_upload, pid, kCloudId,
                          hybrid::serialize(*upload));

    // -- cloud --
    ByteReader r(env.payload);
    auto sk = hybrid::deserialize_signcrypted_key(r);
    if (!sk.ok()) return sk.error();
    if (!r.done()) return decode_err("signcrypted_key_upload: trailing bytes");
    auto rit = s.cloud.pt.find(sk.value().pid);
    if (rit == s.cloud.pt.end())
      return Error{Errc::unknown_id, "signcrypted_key_upload: producer not in table"};
    if (auto st = hybrid::verify_signcrypted_key(sk.value(), rit->second.sig_pub); !st.ok())
      return st;
    const std::string kid_key(sk.value().kid.begin(), sk.value().kid.end());
    s.cloud.wsan_keys[kid_key] = sk.take();
  }

  const hybrid::SigncryptedData sd =
      hybrid::signcrypt_data(record, plaintext, pid, p.key, rng);
  ByteWriter w;
  w.str(object_id);
  w.raw(hybrid::serialize(sd));
  auto env = send_plain(s.bus, MsgKind::signcrypted_data_upload, pid, kCloudId, w.take());

  // -- cloud --
  std::string oid;
  hybrid::SigncryptedData stored;
  {
    ByteReader r(env.payload);
    oid = r.str();
    auto parsed = hybrid::deserialize_signcrypted_data(r);
    if (!parsed.ok()) return parsed.error();
    if (!r.done()) return decode_err("signcrypted_data_upload: trailing bytes");
    stored = parsed.take();
  }
  auto rit = s.cloud.pt.find(stored.pid);
  if (rit == s.cloud.pt.end())
    return Error{Errc::unknown_id, "signcrypted_data_upload: producer not in table"};
  if (auto st = hybrid::verify_signcrypted_data(stored, rit->second.sig_pub); !st.ok())
    return st;
  s.cloud.wsan_objects[oid] = std::move(stored);
  return {};
}

// ----------------------------------------------------------------------------
// downloads

namespace {

// Nested wrapped-key download: the consumer asks by key id, the cloud brings
// the consumer and the stored key object current (key objects are re-encrypted
// exactly like ordinary objects), and the consumer rebuilds the record.
Status fetch_wrapped_key(System& s, ConsumerState& c, const hybrid::Kid& kid,
                         algebra::Rng& rng) {
  ByteWriter w;
  w.u64(c.cid);
  w.raw(kid);
  auto env = send_plain(s.bus, MsgKind::key_request, c.cid, kCloudId, w.take());

  // -- cloud --
  Id req_cid = 0;
  std::string kid_key;
  {
    ByteReader r(env.payload);
    req_cid = r.u64();
    auto kb = r.raw(hybrid::kKidBytes);
    if (!r.ok() || !r.done()) return decode_err("key_request: malformed");
    kid_key.assign(kb.begin(), kb.end());
  }
  auto rit = s.cloud.ct.find(req_cid);
  if (rit == s.cloud.ct.end())
    return Error{Errc::unknown_id, "key_request: unknown or revoked consumer"};
  auto kit = s.cloud.wsan_keys.find(kid_key);
  if (kit == s.cloud.wsan_keys.end())
    return Error{Errc::unknown_id, "key_request: no such key object"};

  if (rit->second.v_dk < s.cloud.v_mk()) {
    if (auto st = remote_consumer_update(s, req_cid, rng); !st.ok()) return st;
  }

  // Lift the wrapped ciphertext if it lags and persist the result; the
  // producer's signature survives because it covers the rebase-normalized
  // view of the ciphertext.
  {
    ByteReader r(kit->second.ciphertext);
    auto ct = abe::deserialize_ciphertext(r);
    if (!ct.ok()) return ct.error();
    if (!r.done()) return decode_err("stored key object: trailing bytes");
    if (ct.value().version < s.cloud.v_mk()) {
      abe::Ciphertext lifted = ct.take();
      s.cloud.lift_object(lifted);
      ByteWriter lw;
      abe::serialize(lifted, lw);
      kit->second.ciphertext = lw.take();
    }
  }

  auto reply = send_signed(s.bus, MsgKind::key_reply, kCloudId, c.cid,
                           hybrid::serialize(kit->second), s.cloud.key);

  // -- consumer --
  if (auto st = check_envelope(c.cloud_pub, reply); !st.ok()) return st;
  ByteReader r(reply.payload);
  auto sk = hybrid::deserialize_signcrypted_key(r);
  if (!sk.ok()) return sk.error();
  if (!r.done()) return decode_err("key_reply: trailing bytes");
  auto rec = hybrid::open_signcrypted_key(sk.value(), c.dk, c.sig_table);
  if (!rec.ok()) return rec.error();
  c.symkeys.insert(rec.take());
  return {};
}

}  // namespace

Result<algebra::G1> download_remote(System& s, Id cid, std::string_view object_id,
                                    algebra::Rng& rng) {
  auto cit = s.consumers.find(cid);
  if (cit == s.consumers.end()) return Error{Errc::unknown_id, "no such consumer endpoint"};

  ByteWriter w;
  w.u64(cid);
  w.str(object_id);
  auto env = send_plain(s.bus, MsgKind::download_request, cid, kCloudId, w.take());

  // -- cloud --
  Id req_cid = 0;
  std::string oid;
  {
    ByteReader r(env.payload);
    req_cid = r.u64();
    oid = r.str();
    if (!r.ok() || !r.done()) return decode_err("download_request: malformed");
  }
  auto rit = s.cloud.ct.find(req_cid);
  if (rit == s.cloud.ct.end())
    return Error{Errc::unknown_id, "download_request: unknown or revoked consumer"};
  auto oit = s.cloud.objects.find(oid);
  if (oit == s.cloud.objects.end())
    return Error{Errc::unknown_id, "download_request: no such object"};

  // Bring a lagging consumer current, then lift a lagging object; both
  // results persist, so a repeat download does neither.
  if (rit->second.v_dk < s.cloud.v_mk()) {
    if (auto st = remote_consumer_update(s, req_cid, rng); !st.ok()) return st.error();
  }
  s.cloud.lift_object(oit->second);

  ByteWriter wr;
  abe::serialize(oit->second, wr);
  auto reply = send_signed(s.bus, MsgKind::download_reply, kCloudId, cid, wr.take(),
                           s.cloud.key);

  // -- consumer --
  ConsumerState& c = cit->second;
  if (auto st = check_envelope(c.cloud_pub, reply); !st.ok()) return st.error();
  ByteReader r(reply.payload);
  auto ct = abe::deserialize_ciphertext(r);
  if (!ct.ok()) return ct.error();
  if (!r.done()) return decode_err("download_reply: trailing bytes");
  return abe::decrypt(ct.value(), c.dk);
}

Result<Bytes> download_wsan(System& s, Id cid, std::string_view object_id,
                            algebra::Rng& rng) {
  auto cit = s.consumers.find(cid);
  if (cit == s.consumers.end()) return Error{Errc::unknown_id, "no such consumer endpoint"};
  ConsumerState& c = cit->second;

  ByteWriter w;
  w.u64(cid);
  w.str(object_id);
  auto env = send_plain(s.bus, MsgKind::download_request, cid, kCloudId, w.take());

  // -- cloud --
  Id req_cid = 0;
  std::string oid;
  {
    ByteReader r(env.payload);
    req_cid = r.u64();
    oid = r.str();
    if (!r.ok() || !r.done()) return decode_err("download_request: malformed");
  }
  if (s.cloud.ct.find(req_cid) == s.cloud.ct.end())
    return Error{Errc::unknown_id, "download_request: unknown or revoked consumer"};
  auto oit = s.cloud.wsan_objects.find(oid);
  if (oit == s.cloud.wsan_objects.end())
    return Error{Errc::unknown_id, "download_request: no such object"};

  // The symmetric object is served verbatim — no staleness handling here.
  // Any re-encryption work happens on the nested wrapped-key download.
  auto reply = send_signed(s.bus, MsgKind::download_reply, kCloudId, cid,
                           hybrid::serialize(oit->second), s.cloud.key);

  // -- consumer --
  if (auto st = check_envelope(c.cloud_pub, reply); !st.ok()) return st.error();
  ByteReader r(reply.payload);
  auto sd = hybrid::deserialize_signcrypted_data(r);
  if (!sd.ok()) return sd.error();
  if (!r.done()) return decode_err("download_reply: trailing bytes");

  auto opened = hybrid::unsigncrypt_data(sd.value(), c.symkeys, c.sig_table);
  if (!opened.ok() && opened.code() == Errc::need_key) {
    if (auto st = fetch_wrapped_key(s, c, sd.value().kid, rng); !st.ok()) return st.error();
    opened = hybrid::unsigncrypt_data(sd.value(), c.symkeys, c.sig_table);
  }
  return opened;
}

// ----------------------------------------------------------------------------
// direct exchange

Status direct_exchange(System& s, Id pid, std::span<const std::uint8_t> plaintext,
                       const policy::Policy& access_policy, algebra::Rng& rng) {
  auto pit = s.producers.find(pid);
  if (pit == s.producers.end()) return Error{Errc::unknown_id, "no such producer endpoint"};
  ProducerState& p = pit->second;
  if (!p.is_wsan) return Error{Errc::precondition, "not a WSAN producer"};
  const hybrid::SymKeyRecord* record = p.symkeys.find_by_policy(access_policy);
  if (!record)
    return Error{Errc::precondition,
                 "no key record for this policy yet; upload through the cloud first"};

  const hybrid::SigncryptedData sd =
      hybrid::signcrypt_data(*record, plaintext, pid, p.key, rng);
  auto env = send_plain(s.bus, MsgKind::wsan_data_broadcast, pid, kBroadcastId,
                        hybrid::serialize(sd));

  // -- every WSAN consumer --
  ByteReader r(env.payload);
  auto parsed = hybrid::deserialize_signcrypted_data(r);
  if (!parsed.ok()) return parsed.error();
  if (!r.done()) return decode_err("wsan_data_broadcast: trailing bytes");
  const hybrid::SigncryptedData& received = parsed.value();

  for (const auto& member : s.gateway.slots) {
    auto cit = s.consumers.find(member.first);
    if (cit == s.consumers.end()) continue;
    ConsumerState& c = cit->second;
    auto opened = hybrid::unsigncrypt_data(received, c.symkeys, c.sig_table);
    if (!opened.ok() && opened.code() == Errc::need_key) {
      auto st = fetch_wrapped_key(s, c, received.kid, rng);
      if (!st.ok()) {
        // An unauthorized member fetches the key and fails to unwrap it;
        // that is a per-endpoint outcome, not a procedure failure.
        if (st.code() == Errc::not_authorized) continue;
        return st;
      }
      opened = hybrid::unsigncrypt_data(received, c.symkeys, c.sig_table);
    }
    // Other per-endpoint failures drop the payload the way a real device
    // would (e.g. the producer was pruned from this member's table).
    if (opened.ok()) c.inbox.push_back(opened.take());
  }
  return {};
}

// ----------------------------------------------------------------------------
// leaves

Status producer_leave(System& s, std::span<const Id> pids) {
  // Unknown ids are skipped rather than failing the batch.
  std::vector<Id> leaving;
  for (Id pid : pids)
    if (s.authority.producers.count(pid) != 0 &&
        std::count(leaving.begin(), leaving.end(), pid) == 0)
      leaving.push_back(pid);
  if (leaving.empty()) return {};

  // Authority -> cloud: the id list, signed.
  ByteWriter w1;
  for (Id pid : leaving) w1.u64(pid);
  auto env1 = send_signed(s.bus, MsgKind::producer_leave_notice, kAuthorityId, kCloudId,
                          w1.take(), s.authority.key);

  // -- cloud --
  std::vector<Id> cloud_removals;
  {
    if (auto st = check_envelope(s.cloud.authority_pub, env1); !st.ok()) return st;
    if (env1.payload.empty() || env1.payload.size() % 8 != 0)
      return decode_err("producer_leave_notice: malformed id list");
    ByteReader r(env1.payload);
    while (!r.done()) cloud_removals.push_back(r.u64());
  }

  std::vector<Id> wsan_ids;
  for (Id pid : leaving)
    if (s.authority.producers.at(pid).is_wsan) wsan_ids.push_back(pid);

  std::vector<Id> gateway_removals;
  std::vector<Id> consumer_removals;
  if (!wsan_ids.empty()) {
    // Authority -> gateway: the WSAN subset, signed.
    ByteWriter w2;
    for (Id pid : wsan_ids) w2.u64(pid);
    auto env2 = send_signed(s.bus, MsgKind::producer_leave_relay, kAuthorityId, kGatewayId,
                            w2.take(), s.authority.key);

    // -- gateway --
    {
      if (auto st = check_envelope(s.gateway.authority_pub, env2); !st.ok()) return st;
      if (env2.payload.empty() || env2.payload.size() % 8 != 0)
        return decode_err("producer_leave_relay: malformed id list");
      ByteReader r(env2.payload);
      while (!r.done()) gateway_removals.push_back(r.u64());
    }

    // Gateway -> WSAN: the authority-signed list, verbatim.
    ByteWriter w3;
    w3.raw(*env2.signature);
    w3.raw(env2.payload);
    auto env3 = send_plain(s.bus, MsgKind::producer_leave_broadcast, kGatewayId,
                           kBroadcastId, w3.take());

    // -- every WSAN consumer (same bytes everywhere, one verification) --
    {
      if (env3.payload.size() < crypto::kSignatureBytes + 8)
        return decode_err("producer_leave_broadcast: short");
      std::array<std::uint8_t, crypto::kSignatureBytes> inner_sig{};
      std::copy_n(env3.payload.begin(), crypto::kSignatureBytes, inner_sig.begin());
      const Bytes inner(env3.payload.begin() + crypto::kSignatureBytes, env3.payload.end());
      if (!crypto::verify(s.authority.key.public_key,
                          envelope_message(MsgKind::producer_leave_relay, kAuthorityId, inner),
                          inner_sig))
        return Error{Errc::bad_signature,
                     "producer_leave_broadcast: relayed signature does not verify"};
      if (inner.size() % 8 != 0)
        return decode_err("producer_leave_broadcast: malformed id list");
      ByteReader r(inner);
      while (!r.done()) consumer_removals.push_back(r.u64());
    }
  }

  // Commit. The devices themselves persist — a removed producer's next
  // upload dies at the cloud's table check.
  for (Id pid : leaving) s.authority.producers.erase(pid);
  for (Id pid : cloud_removals) s.cloud.pt.erase(pid);
  for (Id pid : gateway_removals) s.gateway.sig_table.erase(pid);
  for (const auto& member : s.gateway.slots) {
    auto cit = s.consumers.find(member.first);
    if (cit == s.consumers.end()) continue;
    for (Id pid : consumer_removals) cit->second.sig_table.erase(pid);
  }
  return {};
}

Status consumer_leave(System& s, std::span<const Id> cids, algebra::Rng& rng) {
  if (cids.empty()) return Error{Errc::argument_error, "no consumers named"};
  std::vector<Id> leaving;
  for (Id cid : cids) {
    if (s.authority.consumers.count(cid) == 0)
      return Error{Errc::unknown_id, "consumer_leave: unknown consumer id"};
    if (std::count(leaving.begin(), leaving.end(), cid) == 0) leaving.push_back(cid);
  }

  // -- authority: rotate the epoch (staged) --
  auto [mk2, uk] = abe::update_mk(s.authority.mk, rng);
  auto ek2 = abe::update_ek(s.authority.ek, uk.u_ek, uk.version);
  if (!ek2.ok()) return ek2.error();

  // Authority -> cloud: the full update record + the leaving ids, sealed to
  // the cloud and signed.
  ByteWriter inner1;
  inner1.u64(uk.version);
  inner1.raw(uk.u_cp.to_bytes());
  inner1.raw(algebra::g0_to_bytes(uk.u_ek));
  inner1.raw(uk.u_dk.to_bytes());
  for (Id cid : leaving) inner1.u64(cid);
  const Bytes inner1_bytes = inner1.take();
  auto env1 = send_signed(s.bus, MsgKind::consumer_leave_notice, kAuthorityId, kCloudId,
                          crypto::seal_to(s.cloud.box.public_key, inner1_bytes, rng),
                          s.authority.key);

  // -- cloud (staged) --
  abe::UpdateKey cloud_uk;
  std::vector<Id> cloud_removals;
  abe::EncryptionKey cloud_ek;
  {
    if (auto st = check_envelope(s.cloud.authority_pub, env1); !st.ok()) return st;
    auto plain = open_box(s.cloud.box, env1.payload,
                          "consumer_leave_notice: sealed update did not open");
    if (!plain.ok()) return plain.error();
    const Bytes& pb = plain.value();
    ByteReader r(pb);
    cloud_uk.version = r.u64();
    auto u_cp = get_scalar(r);
    auto u_ek = get_g0(r);
    auto u_dk = get_scalar(r);
    if (!u_cp || !u_ek || !u_dk || !r.ok() || r.remaining() == 0 || r.remaining() % 8 != 0)
      return decode_err("consumer_leave_notice: malformed");
    while (!r.done()) cloud_removals.push_back(r.u64());
    cloud_uk.u_cp = *u_cp;
    cloud_uk.u_ek = *u_ek;
    cloud_uk.u_dk = *u_dk;
    auto lifted = abe::update_ek(s.cloud.ek, cloud_uk.u_ek, cloud_uk.version);
    if (!lifted.ok()) return lifted.error();
    cloud_ek = lifted.take();
  }
  std::vector<Id> revoked_wsan;
  for (Id cid : cloud_removals) {
    auto it = s.cloud.ct.find(cid);
    if (it != s.cloud.ct.end() && it->second.is_wsan) revoked_wsan.push_back(cid);
  }

  // Cloud -> gateway: new-epoch element + key-update share + the revoked
  // WSAN ids (so the gateway knows whom to exclude), sealed and signed.
  ByteWriter inner2;
  inner2.u64(cloud_uk.version);
  inner2.raw(algebra::g0_to_bytes(cloud_uk.u_ek));
  inner2.raw(cloud_uk.u_dk.to_bytes());
  for (Id cid : revoked_wsan) inner2.u64(cid);
  const Bytes inner2_bytes = inner2.take();
  auto env2 = send_signed(s.bus, MsgKind::consumer_leave_gateway, kCloudId, kGatewayId,
                          crypto::seal_to(s.gateway.box.public_key, inner2_bytes, rng),
                          s.cloud.key);

  // -- gateway (staged) --
  std::uint64_t gw_version = 0;
  G0 gw_u_ek;
  Scalar gw_u_dk;
  std::vector<Id> gw_removals;
  {
    if (auto st = check_envelope(s.gateway.cloud_pub, env2); !st.ok()) return st;
    auto plain = open_box(s.gateway.box, env2.payload,
                          "consumer_leave_gateway: sealed update did not open");
    if (!plain.ok()) return plain.error();
    const Bytes& pb = plain.value();
    ByteReader r(pb);
    gw_version = r.u64();
    auto u_ek = get_g0(r);
    auto u_dk = get_scalar(r);
    if (!u_ek || !u_dk || !r.ok() || r.remaining() % 8 != 0)
      return decode_err("consumer_leave_gateway: malformed");
    while (!r.done()) gw_removals.push_back(r.u64());
    if (gw_version != s.gateway.v_mk + 1)
      return Error{Errc::stale_update, "consumer_leave_gateway: unexpected version"};
    gw_u_ek = *u_ek;
    gw_u_dk = *u_dk;
  }

  // Receivers that remain: every enrolled slot except the revoked ones.
  bcast::ReceiverSet remaining = bcast::ReceiverSet::none(s.gateway.bpk.n);
  for (const auto& [mcid, slot] : s.gateway.slots)
    if (std::count(gw_removals.begin(), gw_removals.end(), mcid) == 0)
      remaining.insert(slot);
  const bool have_wsan_producers = !s.gateway.sig_table.empty();

  // ONE broadcast: the new-epoch element for producers plus the key-update
  // share wrapped so that only the remaining consumers recover it. The
  // accounted size follows the over-the-air convention — signature, element,
  // and wrapped share; the receiver bitmap travels free because every member
  // already knows the set.
  std::optional<Envelope> env3;
  if (!remaining.empty()) {
    auto header = bcast::bc_encrypt(s.gateway.bpk, remaining, gw_u_dk.to_bytes(), rng);
    if (!header.ok()) return header.error();
    ByteWriter w3;
    w3.raw(algebra::g0_to_bytes(gw_u_ek));
    w3.raw(bcast::serialize_header(header.value()));
    env3 = send_signed(s.bus, MsgKind::revocation_broadcast, kGatewayId, kBroadcastId,
                       w3.take(), s.gateway.key,
                       crypto::kSignatureBytes + algebra::kG0Bytes +
                           bcast::kHeaderElementBytes + bcast::kPayloadBytes);
  } else if (have_wsan_producers) {
    // No consumers left to rekey, but producers still need the new element.
    ByteWriter w3;
    w3.raw(algebra::g0_to_bytes(gw_u_ek));
    env3 = send_signed(s.bus, MsgKind::revocation_broadcast, kGatewayId, kBroadcastId,
                       w3.take(), s.gateway.key);
  }

  // -- every WSAN endpoint (staged; each holds the same gateway key) --
  G0 bc_u_ek;
  std::optional<bcast::BroadcastHeader> bc_header;
  if (env3) {
    if (auto st = check_envelope(s.gateway.key.public_key, *env3); !st.ok()) return st;
    ByteReader r(env3->payload);
    auto u_ek = get_g0(r);
    if (!u_ek) return decode_err("revocation_broadcast: malformed");
    if (!r.done()) {
      auto header = bcast::deserialize_header(s.gateway.bpk.n, r);
      if (!header.ok()) return header.error();
      if (!r.done()) return decode_err("revocation_broadcast: trailing bytes");
      bc_header = header.take();
    }
    bc_u_ek = *u_ek;
  }

  // Producers: the element is absolute and broadcasts keep WSAN members
  // current, so this is always a one-step lift.
  std::vector<std::pair<Id, abe::EncryptionKey>> producer_updates;
  if (env3) {
    for (auto& [ppid, p] : s.producers) {
      if (s.gateway.sig_table.count(ppid) == 0) continue;
      auto updated = abe::update_ek(p.ek, bc_u_ek, gw_version);
      if (!updated.ok()) return updated.error();
      producer_updates.emplace_back(ppid, updated.take());
    }
  }

  // Remaining consumers unwrap the share and lift their key anchor. Excluded
  // (revoked) endpoints cannot unwrap; for them the honest step is only the
  // table wipe below.
  std::vector<std::pair<Id, abe::DecryptionKey>> consumer_updates;
  if (bc_header) {
    for (const auto& [mcid, slot] : s.gateway.slots) {
      if (!remaining.contains(slot)) continue;
      auto cit = s.consumers.find(mcid);
      if (cit == s.consumers.end()) continue;
      ConsumerState& c = cit->second;
      auto share = bcast::bc_decrypt(c.bpk, c.d_cid, *bc_header);
      if (!share.ok()) return share.error();
      auto u_dk = Scalar::from_bytes(share.value());
      if (!u_dk) return decode_err("revocation_broadcast: bad key share");
      const std::vector<abe::VersionedScalar> steps{{gw_version, *u_dk}};
      auto lifted = abe::update_dk(c.dk, steps);
      if (!lifted.ok()) return lifted.error();
      consumer_updates.emplace_back(mcid, lifted.take());
    }
  }

  // ---- commit ----
  s.authority.mk = mk2;
  s.authority.ek = ek2.take();
  s.authority.history.push_back(uk);
  for (Id cid : leaving) s.authority.consumers.erase(cid);

  // Cloud: new mirror, prefix-product extension, row pruning. WSAN rows are
  // marked current — producers rekey from the broadcast, and the consumer
  // anchors are lifted here so each stored (anchor, version) pair stays
  // truthful rather than recording a version the bytes are not at.
  s.cloud.ek = cloud_ek;
  s.cloud.history.push_back(cloud_uk);
  s.cloud.prefix_cp.push_back(s.cloud.prefix_cp.back() * cloud_uk.u_cp);
  for (Id cid : cloud_removals) s.cloud.ct.erase(cid);
  for (auto& [ppid, row] : s.cloud.pt)
    if (row.is_wsan) row.v_ek = cloud_uk.version;
  for (auto& [mcid, row] : s.cloud.ct) {
    if (!row.is_wsan) continue;
    algebra::Meter::Scope scope("protocol.update_dk");
    row.d = algebra::g0_exp(row.d, cloud_uk.u_dk);
    row.v_dk = cloud_uk.version;
  }

  s.gateway.v_mk = gw_version;
  for (Id cid : gw_removals) {
    s.gateway.consumers.erase(cid);
    s.gateway.slots.erase(cid);
  }

  for (auto& [ppid, ek] : producer_updates) {
    ProducerState& p = s.producers.at(ppid);
    p.ek = ek;
    p.symkeys.wipe();
  }
  for (auto& [mcid, dk] : consumer_updates) s.consumers.at(mcid).dk = dk;

  // Everyone in the WSAN drops symmetric-key records at an epoch change,
  // revoked members included (an honest device follows the procedure even
  // when it can no longer unwrap the share).
  if (env3) {
    for (auto& [mcid, c] : s.consumers)
      if (c.is_wsan) c.symkeys.wipe();
  }
  s.bus.epoch = cloud_uk.version;
  return {};
}

// ----------------------------------------------------------------------------
// remote updates

Status remote_producer_update(System& s, Id pid) {
  auto pit = s.producers.find(pid);
  if (pit == s.producers.end()) return Error{Errc::unknown_id, "no such producer endpoint"};
  ProducerState& p = pit->second;
  auto rit = s.cloud.pt.find(pid);
  if (rit == s.cloud.pt.end()) return Error{Errc::unknown_id, "producer not in table"};
  if (rit->second.v_ek >= s.cloud.v_mk()) return {};  // already current

  // Cloud -> producer: the latest epoch element. The element is absolute, so
  // one message suffices no matter how far behind the producer is.
  ByteWriter w;
  w.raw(algebra::g0_to_bytes(s.cloud.ek.h));
  w.u64(s.cloud.v_mk());
  auto env = send_signed(s.bus, MsgKind::producer_update, kCloudId, pid, w.take(),
                         s.cloud.key);

  // -- producer --
  if (auto st = check_envelope(p.cloud_pub, env); !st.ok()) return st;
  ByteReader r(env.payload);
  auto h = get_g0(r);
  const std::uint64_t version = r.u64();
  if (!h || !r.done()) return decode_err("producer_update: malformed");
  auto updated = abe::update_ek(p.ek, *h, version);
  if (!updated.ok()) return updated.error();

  // Commit.
  p.ek = updated.take();
  rit->second.v_ek = version;
  return {};
}

Status remote_consumer_update(System& s, Id cid, algebra::Rng& rng) {
  auto cit = s.consumers.find(cid);
  if (cit == s.consumers.end()) return Error{Errc::unknown_id, "no such consumer endpoint"};
  ConsumerState& c = cit->second;
  auto rit = s.cloud.ct.find(cid);
  if (rit == s.cloud.ct.end()) return Error{Errc::unknown_id, "consumer not in table"};
  CloudState::ConsumerRow& row = rit->second;
  if (row.v_dk >= s.cloud.v_mk()) return {};  // already current

  // The cloud re-encrypts its copy of the anchor. The accumulated factor is
  // one field product, so this is one exponentiation regardless of the gap.
  G0 new_d;
  {
    algebra::Meter::Scope scope("protocol.update_dk");
    new_d = algebra::g0_exp(row.d, s.cloud.accumulated_dk(row.v_dk, s.cloud.v_mk()));
  }
  ByteWriter inner;
  inner.raw(algebra::g0_to_bytes(new_d));
  inner.u64(s.cloud.v_mk());
  const Bytes inner_bytes = inner.take();
  auto env = send_signed(s.bus, MsgKind::consumer_update, kCloudId, cid,
                         crypto::seal_to(row.kdk_pub, inner_bytes, rng), s.cloud.key);

  // -- consumer --
  if (auto st = check_envelope(c.cloud_pub, env); !st.ok()) return st;
  auto plain = open_box(c.kdk, env.payload, "consumer_update: sealed anchor did not open");
  if (!plain.ok()) return plain.error();
  const Bytes& pb = plain.value();
  ByteReader r(pb);
  auto d = get_g0(r);
  const std::uint64_t version = r.u64();
  if (!d || !r.done()) return decode_err("consumer_update: malformed");
  if (version <= c.dk.version)
    return Error{Errc::stale_update, "consumer_update: version not newer"};

  // Commit.
  c.dk.d = *d;
  c.dk.version = version;
  row.d = new_d;
  row.v_dk = version;
  return {};
}

}  // namespace seabrew::protocol
