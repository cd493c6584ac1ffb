from setuptools import setup, find_packages

setup(
    name="pydiaa",
    version="0.1.0",
    description="Interpretability-guided sparse adversarial attacks (DI-AA) on a small numpy network engine",
    license="MIT",
    install_requires=["numpy", "jsonschema", "tqdm"],
    scripts=["pydiaa/diaa.py"],
    packages=find_packages(exclude=["test"]),
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
    ],
    keywords="adversarial-examples deep-taylor-decomposition"
)
