"""WebID-authenticated content access service (CAS).

An embedded RDF quad store with per-actor named graphs, document
management, permission-based access control keyed on WebIDs, and
ZIP-packaged cross-domain data exchange.
"""

__version__ = "0.1.0"
