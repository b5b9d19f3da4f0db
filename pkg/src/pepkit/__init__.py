"""pepkit: user-driven privacy enforcement for IoT-to-cloud services.

The package wires together a privacy DSL (PDL) with code generation for
policies and monitoring specs, a gateway-resident privacy enforcement point
(per-field envelope encryption, annotation-based flow control, event-triggered
emergency grants), a mock multi-tenant cloud with an owner-confidential
tamper-evident access log, and a trusted-third-party audit gate.
"""

__version__ = "0.1.0"
