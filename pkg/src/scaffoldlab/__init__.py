"""Multi-agent code generation under Waterfall, V-Model and Agile coordination scaffolds."""

__version__ = "0.1.0"
