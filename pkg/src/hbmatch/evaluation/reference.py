"""Published reference figures carried as report metadata, never as test oracles."""

# TAR (%) at 0.1% / 0.01% FAR for each modality row and matching column
ACCURACY = {
    "face-only": {
        "feature_length": 512,
        "euclid": {"0.1%": 71.34, "0.01%": 81.19},
        "innerprod": {"0.1%": 70.53, "0.01%": 79.83},
        "plain": {"0.1%": 71.34, "0.01%": 81.19},
    },
    "single-iris": {
        "feature_length": 250,
        "euclid": {"0.1%": 96.41, "0.01%": 95.89},
        "innerprod": {"0.1%": 96.41, "0.01%": 95.89},
        "plain": {"0.1%": 96.41, "0.01%": 95.89},
    },
    "dual-iris-fusion": {
        "feature_length": 500,
        "euclid": {"0.1%": 98.81, "0.01%": 97.62},
        "innerprod": {"0.1%": 95.0, "0.01%": 94.0},
        "plain": {"0.1%": 98.81, "0.01%": 97.62},
    },
    "full-fusion": {
        "feature_length": 1012,
        "euclid": {"0.1%": 100.0, "0.01%": 100.0},
        "innerprod": {"0.1%": 100.0, "0.01%": 100.0},
        "plain": {"0.1%": 100.0, "0.01%": 100.0},
    },
}

# one-to-one match latency in seconds (8-core i7-10700 @ 2.9 GHz)
TIMING = {"encrypted_s": 1.05, "plain_s": 0.63}

# container sizes in bytes
SIZES = {
    "public_key": 736 * 1024,
    "secret_key": 272 * 1024,
    "galois_keys": int(9.2 * 1024 * 1024),
    "relin_key": int(408.5 * 1024),
    "ciphertext": 128 * 1024,
}

NOTES = [
    "exact integer arithmetic makes euclid, innerprod and plain columns identical by construction",
    "absolute accuracies are not comparable: synthetic identities replace the restricted dataset",
]
