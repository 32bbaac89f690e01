from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="hieranderson",
    version="0.1.0",
    description="Hierarchical Anderson model: spectra, integrated density of states and Lifshits tails",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires=">=3.10",
    install_requires=[
        "click>=8.1.7",
        "joblib>=1.4.2",
        "numpy>=1.26.4",
        "pandas>=2.2.2",
        "python-dotenv>=1.0.1",
        "PyYAML>=6.0.1",
        "scipy>=1.14.0",
        "tenacity>=8.5.0",
        "tqdm>=4.66.4",
    ],
    extras_require={
        "dev": [
            "pytest",
            "pytest-cov",
            "hypothesis",
            "flake8",
            "black",
            "mypy",
        ],
    },
    entry_points={
        "console_scripts": [
            "hieranderson=hieranderson.runner.app:main",
        ],
    },
)
