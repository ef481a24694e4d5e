#pragma once
// The actor roles and wire procedures that tie the scheme together: a key
// authority that owns the master key, a storage cloud that holds every
// object and re-encrypts lazily, a WSAN gateway that owns the broadcast
// channel, and producer/consumer endpoints either inside the WSAN or remote.
//
// Procedures are free functions that move envelopes between actors over an
// in-process bus. Point-to-point messages from the authority, cloud, and
// gateway are signed; key material in transit to an endpoint travels inside
// a sealed box; consumer requests are unsigned (consumers hold a key
// distribution pair, not a signing pair). Broadcasts come in two flavors:
// relays, where the gateway forwards an authority-signed message verbatim,
// and the revocation broadcast, which the gateway signs itself.
//
// Every send is logged as a trace entry with its accounted byte size:
// signature bytes (40 when present) plus the cryptographic payload.
// Constant envelope framing (kind tag, sender id) and the broadcast
// receiver bitmap are excluded, matching how over-the-air key-management
// traffic is conventionally reported; the revocation broadcast therefore
// accounts exactly signature + new-epoch element + wrapped key share.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seabrew/abe.hpp"
#include "seabrew/bcast.hpp"
#include "seabrew/crypto.hpp"
#include "seabrew/hybrid.hpp"
#include "seabrew/policy.hpp"
#include "seabrew/result.hpp"

namespace seabrew::protocol {

using Id = std::uint64_t;

inline constexpr Id kBroadcastId = 0;  // receiver id: everyone in the WSAN
inline constexpr Id kAuthorityId = 1;
inline constexpr Id kCloudId = 2;
inline constexpr Id kGatewayId = 3;
inline constexpr Id kFirstEndpointId = 16;  // producers and consumers

// ----------------------------------------------------------------------------
// transport

enum class MsgKind : std::uint8_t {
  init_cloud,               // authority -> cloud: encryption key + version
  init_gateway,             // cloud -> gateway: same
  producer_enroll,          // producer -> authority: verification key
  producer_credentials,     // authority -> producer: id + encryption key
  producer_table_row,       // authority -> cloud: producer-table row
  producer_row_relay,       // authority -> gateway: signature-table row
  producer_row_broadcast,   // gateway -> WSAN: the relay, verbatim
  consumer_enroll,          // consumer -> authority: distribution key + attrs
  consumer_credentials,     // authority -> consumer: id + sealed key
  consumer_table_row,       // authority -> cloud: consumer-table row
  consumer_gateway_enroll,  // authority -> gateway: id + distribution key
  consumer_wsan_kit,        // gateway -> consumer: tables + broadcast keys
  object_upload,            // producer -> cloud: attribute-encrypted object
  signcrypted_key_upload,   // producer -> cloud
  signcrypted_data_upload,  // producer -> cloud
  download_request,         // consumer -> cloud: object id (unsigned)
  download_reply,           // cloud -> consumer: the object
  key_request,              // consumer -> cloud: key id (unsigned)
  key_reply,                // cloud -> consumer: the wrapped key
  producer_update,          // cloud -> producer: latest epoch element
  consumer_update,          // cloud -> consumer: sealed re-encrypted anchor
  wsan_data_broadcast,      // producer -> WSAN: signcrypted data
  producer_leave_notice,    // authority -> cloud: leaving producer ids
  producer_leave_relay,     // authority -> gateway: leaving WSAN ids
  producer_leave_broadcast, // gateway -> WSAN: the relay, verbatim
  consumer_leave_notice,    // authority -> cloud: sealed epoch update
  consumer_leave_gateway,   // cloud -> gateway: sealed epoch update
  revocation_broadcast,     // gateway -> WSAN: epoch element + wrapped share
};
std::string_view to_string(MsgKind kind);

struct Envelope {
  MsgKind kind{};
  Id sender = 0;
  Bytes payload;
  std::optional<std::array<std::uint8_t, crypto::kSignatureBytes>> signature;
};

struct TraceEntry {
  std::uint64_t epoch = 0;  // master-key version when the message was sent
  MsgKind kind{};
  Id sender = 0;
  Id receiver = 0;
  std::size_t bytes = 0;  // accounted: signature + cryptographic payload
};

// In-process transport. Sending returns the envelope for the caller to hand
// to the receiving actor; a test may install `interceptor` to tamper with
// envelopes in flight (it runs before delivery). Every send appends one
// trace entry; `accounted` overrides the logged size where part of the
// payload is conventionally excluded from accounting.
class Bus {
 public:
  using Signature = std::array<std::uint8_t, crypto::kSignatureBytes>;
  using Interceptor = std::function<void(Envelope&)>;

  Envelope send(MsgKind kind, Id sender, Id receiver, Bytes payload,
                std::optional<Signature> signature,
                std::optional<std::size_t> accounted = std::nullopt);

  const std::vector<TraceEntry>& trace() const { return log_; }
  // One line per message: epoch, kind, sender, receiver, bytes.
  // Tab-separated with a header row.
  std::string trace_dsv() const;

  std::uint64_t epoch = 0;
  Interceptor interceptor;

 private:
  std::vector<TraceEntry> log_;
};

// ----------------------------------------------------------------------------
// actors

struct AuthorityState {
  abe::MasterKey mk;
  abe::EncryptionKey ek;  // kept at the master key's version
  crypto::SigningKey key;
  Id next_id = kFirstEndpointId;  // producer and consumer ids share one space
  struct ProducerRecord {
    algebra::G0 sig_pub;
    bool is_wsan = false;
  };
  struct ConsumerRecord {
    algebra::G0 kdk_pub;
    bool is_wsan = false;
  };
  std::map<Id, ProducerRecord> producers;
  std::map<Id, ConsumerRecord> consumers;
  std::vector<abe::UpdateKey> history;  // one entry per revocation epoch
};

struct CloudState {
  crypto::SigningKey key;
  crypto::BoxKeyPair box;     // receives sealed epoch updates
  algebra::G0 authority_pub;  // pre-provisioned verification key
  abe::EncryptionKey ek;      // mirror; ek.version is the master-key version

  struct ProducerRow {
    algebra::G0 sig_pub;
    std::uint64_t v_ek = 0;
    bool is_wsan = false;
  };
  struct ConsumerRow {
    algebra::G0 d;  // anchor component only — never the attribute components
    std::uint64_t v_dk = 0;
    algebra::G0 kdk_pub;
    bool is_wsan = false;
  };
  std::map<Id, ProducerRow> pt;
  std::map<Id, ConsumerRow> ct;

  std::vector<abe::UpdateKey> history;  // epoch updates, oldest first
  std::map<std::string, abe::Ciphertext> objects;
  std::map<std::string, hybrid::SigncryptedData> wsan_objects;
  std::map<std::string, hybrid::SigncryptedKey> wsan_keys;  // keyed by kid

  std::uint64_t v_mk() const { return ek.version; }

  // O(1) accumulated epoch factors via a prefix-product cache:
  // prefix[v] = u_cp(1) * ... * u_cp(v), prefix[0] = 1. The ciphertext
  // direction multiplies the factors of (from, to]; the key direction is
  // their inverse.
  std::vector<algebra::Scalar> prefix_cp;
  algebra::Scalar accumulated_cp(std::uint64_t from, std::uint64_t to) const;
  algebra::Scalar accumulated_dk(std::uint64_t from, std::uint64_t to) const;

  // Lift a stored ciphertext to the current version in one exponentiation
  // (no-op when already current).
  void lift_object(abe::Ciphertext& object);
};

struct GatewayState {
  crypto::SigningKey key;
  crypto::BoxKeyPair box;
  algebra::G0 authority_pub;
  algebra::G0 cloud_pub;
  std::uint64_t v_mk = 0;
  hybrid::SignatureTable sig_table;     // WSAN producers
  std::map<Id, algebra::G0> consumers;  // WSAN consumer distribution keys
  std::map<Id, std::uint32_t> slots;    // consumer id -> broadcast index
  std::uint32_t next_slot = 1;
  bcast::BroadcastPublicKey bpk;
  std::vector<bcast::BroadcastPrivateKey> receiver_keys;  // index i at [i-1]
};

struct ProducerState {
  Id pid = 0;
  bool is_wsan = false;
  crypto::SigningKey key;
  abe::EncryptionKey ek;
  hybrid::SymKeyTable symkeys;
  algebra::G0 authority_pub;
  algebra::G0 gateway_pub;
  algebra::G0 cloud_pub;

  // Everything the device holds at rest, for asserting that uploaded
  // plaintexts are gone after "securely deletes the original data".
  Bytes state_dump() const;
};

struct ConsumerState {
  Id cid = 0;
  bool is_wsan = false;
  crypto::BoxKeyPair kdk;
  abe::DecryptionKey dk;
  hybrid::SymKeyTable symkeys;
  hybrid::SignatureTable sig_table;  // WSAN copy; stays empty for remote
  bcast::BroadcastPublicKey bpk;     // WSAN only
  bcast::BroadcastPrivateKey d_cid;  // WSAN only
  algebra::G0 authority_pub;
  algebra::G0 gateway_pub;
  algebra::G0 cloud_pub;
  std::vector<Bytes> inbox;  // payloads received over the WSAN channel
};

struct System {
  AuthorityState authority;
  CloudState cloud;
  GatewayState gateway;
  std::map<Id, ProducerState> producers;
  std::map<Id, ConsumerState> consumers;
  Bus bus;
};

// ----------------------------------------------------------------------------
// procedures
//
// Each orchestrates the full message flow between the actors it names.
// Receiving actors validate signatures and seals before anything is
// committed; a failed hop aborts the procedure with all actor state
// unchanged. Per-endpoint outcomes that are part of normal operation (a
// consumer excluded from a broadcast, an unauthorized decryption) do not
// abort anything.

// One-time bring-up: authority master secret, actor key pairs, verification
// keys pre-shared (enrollment is out of band), the encryption key pushed
// authority -> cloud -> gateway over signed hops, and the broadcast channel
// sized for `wsan_capacity` receivers.
Status system_init(System& s, std::uint32_t wsan_capacity, algebra::Rng& rng);

// Registers a new producer and returns its id. WSAN producers additionally
// land in the gateway's signature table, and the authority-signed row is
// broadcast so every WSAN consumer's table copy learns it.
Result<Id> producer_join(System& s, bool is_wsan, algebra::Rng& rng);

// Registers a new consumer with the given attribute set. The decryption key
// travels sealed under the consumer's distribution key; the cloud's row
// holds only the anchor component. WSAN consumers also receive the
// signature table, the broadcast public key, and their sealed broadcast
// private key.
Result<Id> consumer_join(System& s, std::span<const std::string> attributes,
                         bool is_wsan, algebra::Rng& rng);

// Remote-producer upload: encrypt under the producer's current encryption
// key, sign, store at the cloud. A producer whose key lags the master
// version is brought current with exactly one follow-up message (the stored
// object keeps its original version — downloads lift it lazily).
Status upload_remote(System& s, Id pid, std::string_view object_id,
                     const algebra::G1& message,
                     const policy::Policy& access_policy, algebra::Rng& rng);

// WSAN-producer upload: symmetric data object plus, on first use of the
// policy this epoch, one wrapped-key upload. The cloud verifies both
// producer signatures before storing.
Status upload_wsan(System& s, Id pid, std::string_view object_id,
                   std::span<const std::uint8_t> plaintext,
                   const policy::Policy& access_policy, algebra::Rng& rng);

// Download of a remote-produced object. Before serving, the cloud brings a
// lagging consumer current (one sealed message) and lifts a lagging object
// (one exponentiation, persisted); the consumer then verifies and decrypts.
Result<algebra::G1> download_remote(System& s, Id cid,
                                    std::string_view object_id,
                                    algebra::Rng& rng);

// Download of a WSAN-produced object: the symmetric payload is served
// verbatim. A consumer missing the record fetches the wrapped key (that
// nested download follows the re-encryption path), rebuilds the record,
// and retries locally.
Result<Bytes> download_wsan(System& s, Id cid, std::string_view object_id,
                            algebra::Rng& rng);

// One producer broadcast inside the WSAN. Requires the policy's record to
// exist in the producer's table (upload first otherwise). Consumers holding
// the record read immediately; the rest fetch the wrapped key from the
// cloud; unauthorized consumers fetch it and fail to unwrap. Delivered
// payloads land in consumer inboxes.
Status direct_exchange(System& s, Id pid,
                       std::span<const std::uint8_t> plaintext,
                       const policy::Policy& access_policy, algebra::Rng& rng);

// Removes producers. Unknown ids are skipped. If any were WSAN members, the
// gateway relays the authority-signed id list in one broadcast and every
// consumer's signature-table copy drops them.
Status producer_leave(System& s, std::span<const Id> pids);

// Revokes consumers: one epoch rotation at the authority, sealed updates
// down to cloud and gateway, and ONE gateway-signed broadcast carrying the
// new-epoch element plus the key-update share wrapped for every remaining
// WSAN consumer. WSAN endpoints update in place and wipe their symmetric-key
// tables; remote endpoints are left for lazy updates. The cloud prunes the
// revoked rows and marks WSAN endpoints current.
Status consumer_leave(System& s, std::span<const Id> cids, algebra::Rng& rng);

// Brings a lagging remote producer current with one message carrying only
// the latest epoch element.
Status remote_producer_update(System& s, Id pid);

// Brings a lagging remote consumer current: the cloud re-encrypts its copy
// of the anchor component (one exponentiation regardless of the gap) and
// sends it sealed; both sides then record the current version.
Status remote_consumer_update(System& s, Id cid, algebra::Rng& rng);

}  // namespace seabrew::protocol
