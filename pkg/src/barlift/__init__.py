"""Cooperative bar transport by two quadrotors on elastic cables."""
