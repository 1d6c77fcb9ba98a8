import sys

from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec

from webhook import verify_signature

key = ec.generate_private_key(ec.SECP256R1())
pem = key.public_key().public_bytes(
    serialization.Encoding.PEM, serialization.PublicFormat.SubjectPublicKeyInfo
)
body = b'{"event": "push"}'
sig = key.sign(body, ec.ECDSA(hashes.SHA256()))
sys.exit(0 if verify_signature(pem, body, sig) else 1)
