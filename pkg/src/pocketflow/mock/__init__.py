"""Bundled mock services: an in-process workflow repository and execution
service speaking the same wire protocols as their real counterparts."""
