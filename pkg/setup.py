from setuptools import setup, find_packages

setup(
    name="defilter",
    version="0.3.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    include_package_data=True,
    install_requires=[
        "numpy>=1.21.5",
        "scipy>=1.8.0",
        "scikit-learn>=0.24.2",
        "Pillow>=8.4.0",
        "reportlab>=3.6.2",
        "tqdm>=4.64.0",
    ],
    extras_require={
        "test": ["pytest>=7.0"],
    },
    entry_points={
        "console_scripts": [
            "defilter=defilter.cli:main",
        ],
    },
    python_requires=">=3.8",
    description="Zero-order reverse image filtering and reversibility analysis",
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Image Processing",
    ],
)
