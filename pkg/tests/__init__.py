"""Test package marker so helper modules can be imported."""
