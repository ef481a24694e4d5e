"""Revocable attribute-based encryption with constant-size broadcast
revocation and lazy ciphertext lifting.

Everything lives in the compiled core; this package re-exports it. In an
installed wheel the extension sits inside the package; in a build tree the
test harness puts it on sys.path directly, hence the fallback.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:  # build-tree layout: extension next to the sources
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401

__all__ = [
    "Policy",
    "Message",
    "MasterKey",
    "EncryptionKey",
    "DecryptionKey",
    "Ciphertext",
    "UpdateKey",
    "SeabrewError",
    "NotAuthorizedError",
    "VersionError",
    "setup",
    "keygen",
    "random_message",
    "encrypt",
    "decrypt",
    "revoke",
    "update_ciphertext",
    "update_decryption_key",
    "update_encryption_key",
    "traffic_report",
    "simulate",
    "MESSAGE_BYTES",
]
