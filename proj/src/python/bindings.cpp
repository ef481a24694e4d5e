// Python bindings for the core library: the encryption lifecycle (setup,
// keygen, encrypt, decrypt, revoke, and the three lift operations), the
// policy grammar, and the two simulation entry points. Key material crosses
// the boundary as opaque handles that round-trip through bytes; every
// randomized operation takes an optional integer seed (deterministic stream,
// test vectors only) and defaults to the system RNG.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "seabrew/abe.hpp"
#include "seabrew/algebra.hpp"
#include "seabrew/bytes.hpp"
#include "seabrew/policy.hpp"
#include "seabrew/result.hpp"
#include "seabrew/sim.hpp"

namespace py = pybind11;

namespace {

using namespace seabrew;

// Library errors surface as a small exception hierarchy: authorization and
// version mismatches get their own types (callers branch on them), malformed
// input maps onto ValueError, everything else onto the base error.
struct seabrew_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct not_authorized_error : seabrew_error {
  using seabrew_error::seabrew_error;
};
struct version_error : seabrew_error {
  using seabrew_error::seabrew_error;
};

[[noreturn]] void raise_error(const Error& e) {
  switch (e.code) {
    case Errc::not_authorized:
      throw not_authorized_error(e.message);
    case Errc::stale_version:
    case Errc::stale_update:
    case Errc::missing_update:
      throw version_error(e.message);
    case Errc::parse_error:
    case Errc::decode_error:
    case Errc::argument_error:
      throw std::invalid_argument(e.message);
    default:
      throw seabrew_error(e.message);
  }
}

template <typename T>
T unwrap(Result<T> r) {
  if (!r.ok()) raise_error(r.error());
  return r.take();
}

std::unique_ptr<algebra::Rng> make_rng(std::optional<std::uint64_t> seed) {
  if (seed) return std::make_unique<algebra::CounterRng>(*seed);
  return std::make_unique<algebra::SystemRng>();
}

py::bytes to_py_bytes(std::span<const std::uint8_t> b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

template <typename T>
py::bytes serialized(const T& v) {
  ByteWriter w;
  abe::serialize(v, w);
  const Bytes b = w.take();
  return to_py_bytes(b);
}

template <typename T>
T deserialized(const py::bytes& data, Result<T> (*parse)(ByteReader&),
               const char* what) {
  const std::string raw = data;
  ByteReader r(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()),
                         raw.size()));
  Result<T> res = parse(r);
  if (!res.ok()) raise_error(res.error());
  if (!r.done())
    throw std::invalid_argument(std::string(what) +
                                ": trailing bytes after the encoding");
  return res.take();
}

template <typename T>
bool bytes_equal(const T& a, const T& b) {
  ByteWriter wa;
  ByteWriter wb;
  abe::serialize(a, wa);
  abe::serialize(b, wb);
  return wa.bytes() == wb.bytes();
}

// A group-target element used as the KEM payload. Opaque on the Python side:
// compare, round-trip through bytes, or hash the bytes into a symmetric key.
struct Message {
  algebra::G1 value;
};

std::vector<abe::VersionedScalar> cp_steps(std::vector<abe::UpdateKey> updates) {
  std::sort(updates.begin(), updates.end(),
            [](const abe::UpdateKey& a, const abe::UpdateKey& b) {
              return a.version < b.version;
            });
  std::vector<abe::VersionedScalar> steps;
  steps.reserve(updates.size());
  for (const auto& u : updates) steps.push_back({u.version, u.u_cp});
  return steps;
}

std::vector<abe::VersionedScalar> dk_steps(std::vector<abe::UpdateKey> updates) {
  std::sort(updates.begin(), updates.end(),
            [](const abe::UpdateKey& a, const abe::UpdateKey& b) {
              return a.version < b.version;
            });
  std::vector<abe::VersionedScalar> steps;
  steps.reserve(updates.size());
  for (const auto& u : updates) steps.push_back({u.version, u.u_dk});
  return steps;
}

py::dict report_to_dict(const sim::MeterReport& report) {
  py::dict rows;
  for (const auto& row : report.rows) {
    py::dict r;
    r["mean"] = row.mean;
    r["ci95"] = row.ci95;
    r["samples"] = row.samples;
    rows[py::str(row.name)] = r;
  }
  py::list notes;
  for (const auto& n : report.notes) notes.append(n);
  py::dict out;
  out["rows"] = rows;
  out["notes"] = notes;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Revocable attribute-based encryption with constant-size broadcast "
      "revocation and lazy ciphertext lifting.";
  m.attr("__version__") = "0.1.0";
  m.attr("MESSAGE_BYTES") = algebra::kG1Bytes;

  // Translators run newest-first, so the base registers before the derived
  // types or it would swallow them.
  auto base = py::register_exception<seabrew_error>(m, "SeabrewError",
                                                    PyExc_RuntimeError);
  py::register_exception<not_authorized_error>(m, "NotAuthorizedError", base);
  py::register_exception<version_error>(m, "VersionError", base);

  py::class_<policy::Policy>(m, "Policy",
                             "Threshold access policy over attribute names; "
                             "accepts 'and', 'or', and 'k of (...)' forms.")
      .def(py::init([](std::string_view text) {
             return unwrap(policy::Policy::parse(text));
           }),
           py::arg("text"))
      .def("__str__",
           [](const policy::Policy& p) { return p.to_string(); })
      .def("__repr__",
           [](const policy::Policy& p) {
             return "Policy('" + p.to_string() + "')";
           })
      .def("__eq__", &bytes_equal<policy::Policy>, py::is_operator())
      .def_property_readonly("node_count", &policy::Policy::node_count)
      .def_property_readonly(
          "leaf_count",
          [](const policy::Policy& p) { return p.leaves().size(); })
      .def(
          "satisfied_by",
          [](const policy::Policy& p, const std::vector<std::string>& attrs) {
            return p.satisfied_by(attrs);
          },
          py::arg("attributes"))
      .def("to_bytes",
           [](const policy::Policy& p) {
             ByteWriter w;
             p.serialize(w);
             const Bytes b = w.take();
             return to_py_bytes(b);
           })
      .def_static("from_bytes", [](const py::bytes& data) {
        return deserialized<policy::Policy>(data, &policy::Policy::deserialize,
                                            "policy");
      });
  py::implicitly_convertible<py::str, policy::Policy>();

  py::class_<Message>(m, "Message",
                      "Opaque KEM payload: a random group element whose bytes "
                      "feed a KDF on both sides of an exchange.")
      .def("__eq__",
           [](const Message& a, const Message& b) { return a.value == b.value; },
           py::is_operator())
      .def("__repr__",
           [](const Message& msg) {
             const auto b = algebra::g1_to_bytes(msg.value);
             static const char* hex = "0123456789abcdef";
             std::string head;
             for (std::size_t i = 0; i < 4; ++i) {
               head.push_back(hex[b[i] >> 4]);
               head.push_back(hex[b[i] & 0xf]);
             }
             return "Message(" + head + "..)";
           })
      .def("to_bytes",
           [](const Message& msg) {
             return to_py_bytes(algebra::g1_to_bytes(msg.value));
           })
      .def_static("from_bytes", [](const py::bytes& data) {
        const std::string raw = data;
        auto v = algebra::g1_from_bytes(std::span(
            reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
        if (!v)
          throw std::invalid_argument("not a valid message-element encoding");
        return Message{*v};
      });

  py::class_<abe::MasterKey>(m, "MasterKey",
                             "Authority secret; advances one version per "
                             "revocation. Treat the bytes as secret material.")
      .def_property_readonly(
          "version", [](const abe::MasterKey& k) { return k.version; })
      .def("__eq__", &bytes_equal<abe::MasterKey>, py::is_operator())
      .def("__repr__",
           [](const abe::MasterKey& k) {
             return "MasterKey(version=" + std::to_string(k.version) + ")";
           })
      .def("to_bytes", &serialized<abe::MasterKey>)
      .def_static("from_bytes", [](const py::bytes& data) {
        return deserialized<abe::MasterKey>(data, &abe::deserialize_master_key,
                                            "master key");
      });

  py::class_<abe::EncryptionKey>(m, "EncryptionKey",
                                 "Public encryption key pinned to a version.")
      .def_property_readonly(
          "version", [](const abe::EncryptionKey& k) { return k.version; })
      .def("__eq__", &bytes_equal<abe::EncryptionKey>, py::is_operator())
      .def("__repr__",
           [](const abe::EncryptionKey& k) {
             return "EncryptionKey(version=" + std::to_string(k.version) + ")";
           })
      .def("to_bytes", &serialized<abe::EncryptionKey>)
      .def_static("from_bytes", [](const py::bytes& data) {
        return deserialized<abe::EncryptionKey>(
            data, &abe::deserialize_encryption_key, "encryption key");
      });

  py::class_<abe::DecryptionKey>(
      m, "DecryptionKey",
      "Per-member secret key over an attribute set. Treat the bytes as "
      "secret material.")
      .def_property_readonly(
          "version", [](const abe::DecryptionKey& k) { return k.version; })
      .def_property_readonly(
          "attributes",
          [](const abe::DecryptionKey& k) { return k.attributes(); })
      .def("__eq__", &bytes_equal<abe::DecryptionKey>, py::is_operator())
      .def("__repr__",
           [](const abe::DecryptionKey& k) {
             return "DecryptionKey(version=" + std::to_string(k.version) +
                    ", attributes=" + std::to_string(k.components.size()) + ")";
           })
      .def("to_bytes", &serialized<abe::DecryptionKey>)
      .def_static("from_bytes", [](const py::bytes& data) {
        return deserialized<abe::DecryptionKey>(
            data, &abe::deserialize_decryption_key, "decryption key");
      });

  py::class_<abe::Ciphertext>(m, "Ciphertext",
                              "Policy-bound encryption of a message at a "
                              "specific version.")
      .def_property_readonly(
          "version", [](const abe::Ciphertext& c) { return c.version; })
      .def_property_readonly(
          "policy", [](const abe::Ciphertext& c) { return c.access_policy; })
      .def("__eq__", &bytes_equal<abe::Ciphertext>, py::is_operator())
      .def("__repr__",
           [](const abe::Ciphertext& c) {
             return "Ciphertext(version=" + std::to_string(c.version) +
                    ", policy='" + c.access_policy.to_string() + "')";
           })
      .def("to_bytes", &serialized<abe::Ciphertext>)
      .def_static("from_bytes", [](const py::bytes& data) {
        return deserialized<abe::Ciphertext>(data, &abe::deserialize_ciphertext,
                                             "ciphertext");
      });

  py::class_<abe::UpdateKey>(
      m, "UpdateKey",
      "One revocation epoch's update record: lifts ciphertexts, decryption "
      "keys, and the encryption key to its version.")
      .def_property_readonly("version",
                             [](const abe::UpdateKey& u) { return u.version; })
      .def("__eq__", &bytes_equal<abe::UpdateKey>, py::is_operator())
      .def("__repr__",
           [](const abe::UpdateKey& u) {
             return "UpdateKey(version=" + std::to_string(u.version) + ")";
           })
      .def("to_bytes", &serialized<abe::UpdateKey>)
      .def_static("from_bytes", [](const py::bytes& data) {
        return deserialized<abe::UpdateKey>(data, &abe::deserialize_update_key,
                                            "update record");
      });

  m.def(
      "setup",
      [](std::optional<std::uint64_t> seed) {
        auto rng = make_rng(seed);
        auto [mk, ek] = abe::setup(*rng);
        return py::make_tuple(std::move(mk), std::move(ek));
      },
      py::arg("seed") = py::none(),
      "Create a fresh authority: returns (master_key, encryption_key).");

  m.def(
      "keygen",
      [](const abe::MasterKey& mk, const std::vector<std::string>& attributes,
         std::optional<std::uint64_t> seed) {
        auto rng = make_rng(seed);
        return unwrap(abe::keygen(mk, attributes, *rng));
      },
      py::arg("master_key"), py::arg("attributes"),
      py::arg("seed") = py::none(),
      "Issue a decryption key over the given attribute names.");

  m.def(
      "random_message",
      [](std::optional<std::uint64_t> seed) {
        auto rng = make_rng(seed);
        return Message{algebra::random_g1(*rng)};
      },
      py::arg("seed") = py::none(),
      "Draw a fresh KEM payload to encrypt.");

  m.def(
      "encrypt",
      [](const Message& message, const policy::Policy& pol,
         const abe::EncryptionKey& ek, std::optional<std::uint64_t> seed) {
        auto rng = make_rng(seed);
        return abe::encrypt(message.value, pol, ek, *rng);
      },
      py::arg("message"), py::arg("policy"), py::arg("encryption_key"),
      py::arg("seed") = py::none(),
      "Encrypt a message under an access policy (a Policy or a policy "
      "string).");

  m.def(
      "decrypt",
      [](const abe::Ciphertext& ct, const abe::DecryptionKey& dk) {
        return Message{unwrap(abe::decrypt(ct, dk))};
      },
      py::arg("ciphertext"), py::arg("decryption_key"),
      "Recover the message; raises VersionError on a version mismatch and "
      "NotAuthorizedError when the key's attributes do not satisfy the "
      "policy.");

  m.def(
      "revoke",
      [](const abe::MasterKey& mk, std::optional<std::uint64_t> seed) {
        auto rng = make_rng(seed);
        auto [next, uk] = abe::update_mk(mk, *rng);
        return py::make_tuple(std::move(next), std::move(uk));
      },
      py::arg("master_key"), py::arg("seed") = py::none(),
      "Advance the master key one version: returns (new_master_key, "
      "update_record).");

  m.def(
      "update_ciphertext",
      [](const abe::Ciphertext& ct, std::vector<abe::UpdateKey> updates) {
        return unwrap(abe::update_cp(ct, cp_steps(std::move(updates))));
      },
      py::arg("ciphertext"), py::arg("updates"),
      "Lift a ciphertext across the given update records (any order; gaps "
      "raise VersionError).");

  m.def(
      "update_decryption_key",
      [](const abe::DecryptionKey& dk, std::vector<abe::UpdateKey> updates) {
        return unwrap(abe::update_dk(dk, dk_steps(std::move(updates))));
      },
      py::arg("decryption_key"), py::arg("updates"),
      "Lift a decryption key across the given update records (any order; "
      "gaps raise VersionError).");

  m.def(
      "update_encryption_key",
      [](const abe::EncryptionKey& ek, std::vector<abe::UpdateKey> updates) {
        if (updates.empty())
          throw std::invalid_argument("no update records given");
        const auto latest = std::max_element(
            updates.begin(), updates.end(),
            [](const abe::UpdateKey& a, const abe::UpdateKey& b) {
              return a.version < b.version;
            });
        return unwrap(abe::update_ek(ek, latest->u_ek, latest->version));
      },
      py::arg("encryption_key"), py::arg("updates"),
      "Replace the encryption key with the newest record's absolute value; "
      "only the latest record matters.");

  m.def(
      "traffic_report",
      [](std::uint32_t consumers, std::uint32_t producers,
         std::size_t attrs_per_key) {
        return report_to_dict(sim::run_traffic_experiment(
            consumers, producers, attrs_per_key, sim::Profile::eighty_bit));
      },
      py::arg("consumers") = 50, py::arg("producers") = 50,
      py::arg("attrs_per_key") = 20,
      "Measure the radio bytes of both leave procedures on a live protocol "
      "stack (80-bit profile). Returns {'rows': {name: {mean, ci95, "
      "samples}}, 'notes': [...]}.");

  m.def(
      "simulate",
      [](std::uint64_t ciphertexts, std::uint64_t universe, std::uint64_t attrs,
         double daily_requests, double revocation_days, double horizon_days,
         std::uint64_t reps, std::uint64_t seed) {
        sim::WorkloadConfig cfg;
        cfg.ciphertexts = ciphertexts;
        cfg.universe = universe;
        cfg.attrs = attrs;
        cfg.daily_requests = daily_requests;
        cfg.revocation_days = revocation_days;
        cfg.horizon_days = horizon_days;
        cfg.reps = reps;
        cfg.seed = seed;
        return report_to_dict(unwrap(sim::run_compute_experiment(cfg)));
      },
      py::arg("ciphertexts") = 1000, py::arg("universe") = 200,
      py::arg("attrs") = 15, py::arg("daily_requests") = 5000.0,
      py::arg("revocation_days") = 5.0, py::arg("horizon_days") = 30.0,
      py::arg("reps") = 20, py::arg("seed") = 1,
      "Run the discrete-event server-cost workload and return the metered "
      "report as {'rows': {name: {mean, ci95, samples}}, 'notes': [...]}. "
      "Defaults are the desk-scale workload (minutes of compute); shrink the "
      "numbers for quick checks.");
}
