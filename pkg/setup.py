from setuptools import setup, find_packages

###############################################################################

NAME = 'toxtrig'
PACKAGES = find_packages(exclude=['tests', 'tests.*'])
CLASSIFIERS = [
    'Development Status :: 4 - Beta',
    'License :: OSI Approved :: MIT License',
    'Programming Language :: Python :: 3',
    'Topic :: Scientific/Engineering :: Medical Science Apps.',
    'Topic :: Text Processing :: Linguistic',
]

###############################################################################

setup(
    name=NAME,
    version='0.1.0',
    packages=PACKAGES,
    include_package_data=True,
    description='Toxic-habit trigger extraction and scoring for Spanish clinical case reports.',
    keywords=['NER', 'clinical NLP', 'LLM', 'brat'],
    license='MIT',
    classifiers=CLASSIFIERS,
    long_description=open('README.md', 'r').read(),
    long_description_content_type='text/markdown',
    install_requires=open('requirements.txt', 'r').read(),
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': [
            'toxtrig = toxtrig.core:main',
        ],
    },
    python_requires='>=3.9',
    zip_safe=False,
)
