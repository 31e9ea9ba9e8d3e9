"""Natural-language multi-robot missions compiled to behavior trees and sandboxed plans."""

__version__ = "0.1.0"
