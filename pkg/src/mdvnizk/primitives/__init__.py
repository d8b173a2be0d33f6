from .commit import Commitment, commit, verify_open
from .pke import PkeDecodeFailure, PkeKeypair, pk_length, pke_dec, pke_enc, pke_gen
from .prf import PrfKey, prf_eval, prf_gen, prf_stream

__all__ = [
    "Commitment", "commit", "verify_open",
    "PkeDecodeFailure", "PkeKeypair", "pk_length", "pke_dec", "pke_enc", "pke_gen",
    "PrfKey", "prf_eval", "prf_gen", "prf_stream",
]
