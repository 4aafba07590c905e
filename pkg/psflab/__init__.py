from psflab.versions import LAB_VERSION as __version__  # noqa: F401
