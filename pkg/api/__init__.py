"""REST service over the tunnelling model."""
