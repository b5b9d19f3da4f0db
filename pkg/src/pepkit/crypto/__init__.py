"""Data-protection primitives: AEAD field encryption, key wrapping, signatures,
hash chaining, and the per-field/per-epoch keystore."""
