"""PolySSM: patch-token selective SSM forecaster with channel-mixing state transforms."""
