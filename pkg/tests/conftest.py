from hypothesis import settings

# the reference oracles (dense scans, exhaustive enumeration) are slow by design
settings.register_profile("suite", deadline=None)
settings.load_profile("suite")
